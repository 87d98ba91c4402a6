#include "haze/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace haze::data {

std::vector<std::uint8_t> encode_ppm(const Tensor& img) {
  if (img.rank() != 3 || img.shape()[0] != 3)
    throw DimensionError("encode_ppm: expected [3,H,W], got " + shape_str(img.shape()));
  int H = img.shape()[1], W = img.shape()[2];
  for (double v : img.data())
    if (!(v >= -1e-12 && v <= 1.0 + 1e-12))
      throw UsageError("encode_ppm: pixel values must be clamped to [0,1]");

  char header[64];
  int n = std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", W, H);
  std::vector<std::uint8_t> out(header, header + n);
  out.reserve(out.size() + static_cast<std::size_t>(3) * H * W);
  std::size_t hw = static_cast<std::size_t>(H) * W;
  const auto& d = img.data();
  for (std::size_t i = 0; i < hw; ++i)
    for (int c = 0; c < 3; ++c) {
      double v = d[c * hw + i];
      v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
    }
  return out;
}

void save_ppm(const std::string& path, const Tensor& img) {
  auto bytes = encode_ppm(img);
  write_file(path, bytes.data(), bytes.size());
}

namespace {

struct Cursor {
  const std::uint8_t* p;
  std::size_t len;
  std::size_t at = 0;

  int peek() const { return at < len ? p[at] : -1; }
  int take() { return at < len ? p[at++] : -1; }

  void skip_space_and_comments() {
    while (at < len) {
      int c = peek();
      if (c == '#') {
        while (at < len && take() != '\n') {
        }
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++at;
      } else {
        return;
      }
    }
  }

  long parse_int() {
    skip_space_and_comments();
    if (at >= len || peek() < '0' || peek() > '9')
      throw FormatError("ppm: expected an integer", static_cast<long long>(at));
    long v = 0;
    while (at < len && peek() >= '0' && peek() <= '9') {
      v = v * 10 + (take() - '0');
      if (v > 1000000) throw FormatError("ppm: integer out of range", static_cast<long long>(at));
    }
    return v;
  }
};

}  // namespace

Tensor decode_ppm(const std::uint8_t* bytes, std::size_t len) {
  Cursor cur{bytes, len};
  if (len < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw FormatError("ppm: bad magic, expected P6", 0);
  cur.at = 2;
  long w = cur.parse_int();
  long h = cur.parse_int();
  long maxval = cur.parse_int();
  if (w < 1 || h < 1) throw FormatError("ppm: non-positive extents", static_cast<long long>(cur.at));
  if (maxval != 255)
    throw FormatError("ppm: only maxval 255 is supported", static_cast<long long>(cur.at));
  int c = cur.take();
  if (c != ' ' && c != '\t' && c != '\r' && c != '\n')
    throw FormatError("ppm: missing whitespace after maxval", static_cast<long long>(cur.at));
  std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (len - cur.at < need)
    throw FormatError("ppm: truncated payload, need " + std::to_string(need) + " bytes, have " +
                          std::to_string(len - cur.at),
                      static_cast<long long>(len));
  std::size_t hw = static_cast<std::size_t>(w) * h;
  std::vector<double> data(3 * hw);
  const std::uint8_t* px = bytes + cur.at;
  for (std::size_t i = 0; i < hw; ++i)
    for (int ch = 0; ch < 3; ++ch)
      data[ch * hw + i] = px[i * 3 + ch] / 255.0;
  return Tensor::from_data({3, static_cast<int>(h), static_cast<int>(w)}, std::move(data));
}

Tensor load_ppm(const std::string& path) {
  auto bytes = read_file(path);
  return decode_ppm(bytes.data(), bytes.size());
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  f.seekg(0, std::ios::end);
  std::streamoff n = f.tellg();
  f.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n));
  if (n > 0) f.read(reinterpret_cast<char*>(out.data()), n);
  if (!f) throw IoError("failed reading " + path);
  return out;
}

void write_file(const std::string& path, const void* data, std::size_t len) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  if (!f) throw IoError("failed writing " + path);
}

}  // namespace haze::data
