#pragma once

#include "haze/gaze_net.hpp"
#include "haze/tensor.hpp"

namespace haze::metrics {

// 10*log10(max_val^2 / MSE); identical inputs give +infinity.
double psnr(const Tensor& a, const Tensor& b, double max_val = 1.0);

// Single-scale SSIM on the channel-mean luminance plane: 11x11 Gaussian
// window sigma=1.5, K1=0.01, K2=0.03, dynamic range 1, averaged over window
// positions fully inside the image.
double ssim(const Tensor& a, const Tensor& b);

// arccos of the dot product of the two unit gaze vectors, in degrees.
double angular_error_deg(const gaze::GazeAngles& pred, const gaze::GazeAngles& gt);

}  // namespace haze::metrics
