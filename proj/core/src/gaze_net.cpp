#include "haze/gaze_net.hpp"

#include <algorithm>
#include <cmath>

#include "haze/spectral.hpp"

namespace haze::gaze {

std::array<double, 3> angles_to_vector(const GazeAngles& g) {
  double ct = std::cos(g.theta);
  return {-ct * std::sin(g.phi), -std::sin(g.theta), -ct * std::cos(g.phi)};
}

void Landmarks::validate() const {
  for (double v : flat())
    if (!(v >= 0.0 && v <= 1.0))
      throw ParameterError("landmarks: coordinates must lie in [0,1]");
}

void GazeConfig::validate() const {
  if (img_h < 4 || img_w < 4) throw ParameterError("gaze: image size too small");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("gaze: lambda must be in [0,1]");
  if (backbone_channels.empty()) throw ParameterError("gaze: backbone needs at least one stage");
  if (hidden < 2) throw ParameterError("gaze: hidden width must be >= 2");
  int p = static_cast<int>(std::lround(patch_frac * img_h));
  if (p < 2) throw ParameterError("gaze: patch size below 2 pixels");
  if (p > img_h || p > img_w) throw ParameterError("gaze: patch larger than image");
}

GazeConfig GazeConfig::full_scale() {
  GazeConfig cfg;
  cfg.img_h = 112;
  cfg.img_w = 112;
  cfg.backbone_channels = {16, 32, 64, 128};
  cfg.hidden = 512;
  return cfg;
}

void BackboneParams::collect(const std::string& prefix, ParamList& out) {
  for (std::size_t i = 0; i < conv_w.size(); ++i) {
    out.emplace_back(prefix + ".conv" + std::to_string(i) + ".w", conv_w[i]);
    out.emplace_back(prefix + ".conv" + std::to_string(i) + ".b", conv_b[i]);
  }
}

ParamList GazeParams::params() {
  ParamList out;
  static const char* names[5] = {"global", "lmap", "rmap", "lpatch", "rpatch"};
  for (int i = 0; i < 5; ++i) branches[i].collect(std::string("gaze.") + names[i], out);
  out.emplace_back("gaze.fc1.w", fc1_w);
  out.emplace_back("gaze.fc1.b", fc1_b);
  out.emplace_back("gaze.fc2.w", fc2_w);
  out.emplace_back("gaze.fc2.b", fc2_b);
  return out;
}

GazeParams init_gaze(const GazeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  GazeParams p;
  for (int b = 0; b < 5; ++b) {
    int in_ch = 3;
    for (int ch : cfg.backbone_channels) {
      p.branches[b].conv_w.push_back(blocks::init_conv_weight(ch, in_ch, 3, rng));
      p.branches[b].conv_b.push_back(Tensor::zeros({ch}, true));
      in_ch = ch;
    }
  }
  int head_in = 5 * cfg.feature_width() + 10;
  p.fc1_w = blocks::init_fc_weight(cfg.hidden, head_in, rng);
  p.fc1_b = Tensor::zeros({cfg.hidden}, true);
  p.fc2_w = blocks::init_fc_weight(2, cfg.hidden, rng);
  p.fc2_b = Tensor::zeros({2}, true);
  return p;
}

namespace {

int clamp_start(double center_px, int p, int extent) {
  int c = static_cast<int>(std::lround(center_px));
  return std::clamp(c - p / 2, 0, extent - p);
}

Tensor branch_features(const Tensor& x, BackboneParams& bp) {
  Tensor f = x;
  for (std::size_t i = 0; i < bp.conv_w.size(); ++i)
    f = relu(conv2d(f, bp.conv_w[i], bp.conv_b[i], 2, 1));
  int c = f.shape()[0];
  return reshape(global_avg_pool(f), {c});
}

}  // namespace

std::pair<Tensor, Tensor> extract_eye_patches(const Tensor& img, const Landmarks& lm,
                                              double patch_frac) {
  if (img.rank() != 3) throw DimensionError("extract_eye_patches: expected [C,H,W]");
  lm.validate();
  int H = img.shape()[1], W = img.shape()[2];
  int p = static_cast<int>(std::lround(patch_frac * H));
  if (p < 2) throw ParameterError("extract_eye_patches: patch side " + std::to_string(p) + " < 2");
  if (p > H || p > W) throw ParameterError("extract_eye_patches: patch does not fit in image");
  auto crop_at = [&](const Point& e) {
    int y0 = clamp_start(e.y * (H - 1), p, H);
    int x0 = clamp_start(e.x * (W - 1), p, W);
    return crop2d(img, y0, x0, p, p);
  };
  return {crop_at(lm.left_eye), crop_at(lm.right_eye)};
}

Tensor build_global_map(const Tensor& img, double lambda) {
  return spectral::hf_extract(img, lambda);
}

std::pair<Tensor, Tensor> build_local_maps(const Tensor& left_patch, const Tensor& right_patch,
                                           double lambda) {
  return {spectral::hf_extract(left_patch, lambda), spectral::hf_extract(right_patch, lambda)};
}

Tensor gaze_forward_raw(const Tensor& img, const Landmarks& lm, GazeParams& params,
                        const GazeConfig& cfg) {
  cfg.validate();
  if (img.rank() != 3 || img.shape()[0] != 3)
    throw DimensionError("gaze_forward: expected [3,H,W], got " + shape_str(img.shape()));

  auto [left_patch, right_patch] = extract_eye_patches(img, lm, cfg.patch_frac);
  Tensor global_map = build_global_map(img, cfg.lambda);
  auto [left_map, right_map] = build_local_maps(left_patch, right_patch, cfg.lambda);

  std::vector<Tensor> feats;
  feats.push_back(branch_features(global_map, params.branches[0]));
  feats.push_back(branch_features(left_map, params.branches[1]));
  feats.push_back(branch_features(right_map, params.branches[2]));
  feats.push_back(branch_features(left_patch, params.branches[3]));
  feats.push_back(branch_features(right_patch, params.branches[4]));

  auto lmf = lm.flat();
  feats.push_back(Tensor::from_data({10}, std::vector<double>(lmf.begin(), lmf.end())));

  Tensor h = relu(matmul_fc(concat_flat(feats), params.fc1_w, params.fc1_b));
  return matmul_fc(h, params.fc2_w, params.fc2_b);
}

GazeAngles gaze_forward(const Tensor& img, const Landmarks& lm, GazeParams& params,
                        const GazeConfig& cfg) {
  Tensor out = gaze_forward_raw(img, lm, params, cfg);
  return {out.data()[0], out.data()[1]};
}

}  // namespace haze::gaze
