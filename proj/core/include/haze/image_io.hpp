#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "haze/tensor.hpp"

namespace haze::data {

// Binary PPM (P6, 8-bit). Values must already be in [0,1]; the header is
// emitted byte-exactly as "P6\n<w> <h>\n255\n".
std::vector<std::uint8_t> encode_ppm(const Tensor& img);
void save_ppm(const std::string& path, const Tensor& img);

// Throws FormatError carrying the byte offset on malformed input; a
// truncated payload never yields a partial image.
Tensor decode_ppm(const std::uint8_t* bytes, std::size_t len);
Tensor load_ppm(const std::string& path);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const void* data, std::size_t len);

}  // namespace haze::data
