#include "haze/sr_net.hpp"

#include <algorithm>

#include "haze/resize.hpp"

namespace haze::sr {

void SrConfig::validate() const {
  if (scale != 2 && scale != 3 && scale != 4)
    throw ParameterError("sr: scale must be 2, 3 or 4, got " + std::to_string(scale));
  if (channels < 4) throw ParameterError("sr: channels must be >= 4");
  if (num_hfab < 1) throw ParameterError("sr: num_hfab must be >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("sr: lambda must be in [0,1]");
  if (hr_h < scale || hr_w < scale || hr_h % scale != 0 || hr_w % scale != 0)
    throw ParameterError("sr: hr size must be divisible by the scale");
  if (ca_reduction < 1 || channels % ca_reduction != 0)
    throw ParameterError("sr: channels must be divisible by ca_reduction");
}

SrConfig SrConfig::full_scale(int scale) {
  SrConfig cfg;
  cfg.scale = scale;
  cfg.channels = 64;
  cfg.num_hfab = 4;
  cfg.hr_h = 112;
  cfg.hr_w = 112;
  cfg.ca_reduction = 16;
  return cfg;
}

namespace {

// one stride-2 stage for scale 2, a single stride-3 stage for scale 3,
// two stride-2 stages for scale 4
std::vector<int> stage_strides(int scale) {
  if (scale == 2) return {2};
  if (scale == 3) return {3};
  return {2, 2};
}

}  // namespace

SrParams init_sr(const SrConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  SrParams p;
  int F = cfg.channels;
  p.head_w = blocks::init_conv_weight(F, 3, 3, rng);
  p.head_b = Tensor::zeros({F}, true);
  for (int s : stage_strides(cfg.scale)) p.down.push_back(blocks::init_down(F, F, s, rng));
  for (int i = 0; i < cfg.num_hfab; ++i)
    p.hfabs.push_back(blocks::init_hfab(F, cfg.ca_reduction, rng));
  for (int s : stage_strides(cfg.scale)) p.up.push_back(blocks::init_up(F, F, s, rng));
  p.tail_w = blocks::init_conv_weight(3, 2 * F, 3, rng);
  p.tail_b = Tensor::zeros({3}, true);
  return p;
}

ParamList SrParams::params() {
  ParamList out;
  out.emplace_back("sr.head.w", head_w);
  out.emplace_back("sr.head.b", head_b);
  for (std::size_t i = 0; i < down.size(); ++i)
    down[i].collect("sr.down" + std::to_string(i), out);
  for (std::size_t i = 0; i < hfabs.size(); ++i)
    hfabs[i].collect("sr.hfab" + std::to_string(i), out);
  for (std::size_t i = 0; i < up.size(); ++i)
    up[i].collect("sr.up" + std::to_string(i), out);
  out.emplace_back("sr.tail.w", tail_w);
  out.emplace_back("sr.tail.b", tail_b);
  return out;
}

Tensor sr_forward(const Tensor& lr, SrParams& params, const SrConfig& cfg, bool clamp_output) {
  cfg.validate();
  if (lr.rank() != 3 || lr.shape()[0] != 3)
    throw DimensionError("sr_forward: expected [3,h,w], got " + shape_str(lr.shape()));
  if (lr.shape()[1] != cfg.lr_h() || lr.shape()[2] != cfg.lr_w())
    throw DimensionError("sr_forward: lr is " + shape_str(lr.shape()) + ", config expects [3," +
                         std::to_string(cfg.lr_h()) + "," + std::to_string(cfg.lr_w()) + "]");

  Tensor up = data::bicubic_upsample_op(lr, cfg.hr_h, cfg.hr_w);
  Tensor f_b = conv2d(up, params.head_w, params.head_b, 1, 1);
  Tensor f = f_b;
  for (auto& d : params.down) f = blocks::down_block(f, d);
  for (std::size_t i = 0; i < params.hfabs.size(); ++i) {
    bool extract = cfg.hf_per_block || i == 0;
    f = blocks::hfab_forward(f, params.hfabs[i], cfg.lambda, extract);
  }
  for (auto& u : params.up) f = blocks::up_block(f, u);
  Tensor out = conv2d(concat_channels(f, f_b), params.tail_w, params.tail_b, 1, 1);
  if (!clamp_output) return out;
  std::vector<double> clamped = out.data();
  for (double& v : clamped) v = std::clamp(v, 0.0, 1.0);
  return Tensor::from_data(out.shape(), std::move(clamped));
}

}  // namespace haze::sr
