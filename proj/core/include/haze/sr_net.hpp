#pragma once

#include <cstdint>
#include <vector>

#include "haze/blocks.hpp"
#include "haze/tensor.hpp"

namespace haze::sr {

struct SrConfig {
  int scale = 4;        // in {2,3,4}
  int channels = 16;    // feature width F
  int num_hfab = 2;
  double lambda = 0.2;
  int hr_h = 32;
  int hr_w = 32;
  int ca_reduction = 4;
  bool hf_per_block = true;  // false: extractor only on the first HFAB input

  void validate() const;
  int lr_h() const { return hr_h / scale; }
  int lr_w() const { return hr_w / scale; }

  // heavier 112x112 regime; expressible but not exercised by the test suite
  static SrConfig full_scale(int scale = 4);
};

struct SrParams {
  Tensor head_w, head_b;  // 3 -> F
  std::vector<blocks::DownParams> down;
  std::vector<blocks::HfabParams> hfabs;
  std::vector<blocks::UpParams> up;
  Tensor tail_w, tail_b;  // 2F -> 3

  ParamList params();  // names prefixed "sr."
};

SrParams init_sr(const SrConfig& cfg, std::uint64_t seed);

// I_SR = tail(concat(up(HFAB-chain(down(head(bicubic(lr))))), head(bicubic(lr)))).
// Training consumes the raw output; clamp_output is the inference-time
// presentation to [0,1].
Tensor sr_forward(const Tensor& lr, SrParams& params, const SrConfig& cfg,
                  bool clamp_output = false);

}  // namespace haze::sr
