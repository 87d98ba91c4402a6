#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "haze/blocks.hpp"
#include "haze/tensor.hpp"

namespace haze::gaze {

// pitch/yaw in radians
struct GazeAngles {
  double theta = 0.0;
  double phi = 0.0;
};

// (theta, phi) -> unit vector (-cos(theta)sin(phi), -sin(theta), -cos(theta)cos(phi));
// (0,0) looks straight into the camera along -z.
std::array<double, 3> angles_to_vector(const GazeAngles& g);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Five facial anchor points in normalized [0,1]^2 image coordinates.
struct Landmarks {
  Point left_eye, right_eye, nose, mouth_left, mouth_right;

  std::array<double, 10> flat() const {
    return {left_eye.x,    left_eye.y,    right_eye.x,   right_eye.y,  nose.x,
            nose.y,        mouth_left.x,  mouth_left.y,  mouth_right.x, mouth_right.y};
  }
  void validate() const;
};

struct GazeConfig {
  int img_h = 32;
  int img_w = 32;
  double patch_frac = 0.25;
  double lambda = 0.2;
  std::vector<int> backbone_channels = {8, 16, 32};  // one stride-2 conv per entry
  int hidden = 64;                                    // FC head width

  int feature_width() const { return backbone_channels.back(); }
  void validate() const;

  static GazeConfig full_scale();  // 112x112, hidden 512
};

struct BackboneParams {
  std::vector<Tensor> conv_w;  // stride-2 3x3 stages
  std::vector<Tensor> conv_b;

  void collect(const std::string& prefix, ParamList& out);
};

// Branch order: global map, left local map, right local map, left patch,
// right patch. All five backbones are independent.
struct GazeParams {
  std::array<BackboneParams, 5> branches;
  Tensor fc1_w, fc1_b;  // [hidden, 5*feature_width + 10]
  Tensor fc2_w, fc2_b;  // [2, hidden]

  ParamList params();  // names prefixed "gaze."
};

GazeParams init_gaze(const GazeConfig& cfg, std::uint64_t seed);

// Square crops of side round(patch_frac*H) centered on the eye landmarks,
// centers clamped so the windows stay inside the image.
std::pair<Tensor, Tensor> extract_eye_patches(const Tensor& img, const Landmarks& lm,
                                              double patch_frac);

Tensor build_global_map(const Tensor& img, double lambda);
std::pair<Tensor, Tensor> build_local_maps(const Tensor& left_patch, const Tensor& right_patch,
                                           double lambda);

// Graph-building head; returns the raw [2] output (theta, phi).
Tensor gaze_forward_raw(const Tensor& img, const Landmarks& lm, GazeParams& params,
                        const GazeConfig& cfg);
GazeAngles gaze_forward(const Tensor& img, const Landmarks& lm, GazeParams& params,
                        const GazeConfig& cfg);

}  // namespace haze::gaze
