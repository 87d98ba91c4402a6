#pragma once

#include <vector>

#include "haze/tensor.hpp"

namespace haze::data {

// One axis of a separable bicubic resample, Keys kernel a=-0.5 with the
// MATLAB conventions: half-pixel center alignment, kernel support widened by
// 1/scale when downscaling (antialias), weights normalized per output sample,
// source indices clamped at the borders (edge replication).
struct ResizeAxisPlan {
  int in = 0;
  int out = 0;
  int taps = 0;
  std::vector<int> index;      // [out*taps]
  std::vector<double> weight;  // [out*taps], each row sums to 1
};

ResizeAxisPlan make_axis_plan(int in_extent, int out_extent, double scale);

// factor applies to both axes; output extents are ceil(extent*factor).
Tensor bicubic_resize(const Tensor& img, double factor);

// Explicit target extents (scale taken as out/in per axis).
Tensor bicubic_resize_to(const Tensor& img, int out_h, int out_w);

// Recorded, differentiable variant used inside the SR network; the adjoint
// scatters with the same weights.
Tensor bicubic_upsample_op(const Tensor& img, int out_h, int out_w);

}  // namespace haze::data
