#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "haze/tensor.hpp"

namespace haze::data {

// Named-tensor container with phase/epoch metadata. The on-disk format is
// magic "HAZE", a version word, the metadata block, then the tensor table;
// doubles are stored raw (little-endian), so round trips are bit-exact.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::int64_t epoch = 0;
  std::int32_t phase = 0;  // 0 pretrain/none, 1 or 2 for alternating phases
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;

  void add(const std::string& name, const Tensor& t);  // UsageError on duplicate
  const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(std::string_view text);

}  // namespace haze::data
