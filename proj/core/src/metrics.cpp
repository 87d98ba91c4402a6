#include "haze/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace haze::metrics {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 1e-4;    // (K1*L)^2, K1=0.01, L=1
constexpr double kC2 = 9e-4;    // (K2*L)^2, K2=0.03

const std::vector<double>& gaussian_window() {
  static const std::vector<double> win = [] {
    std::vector<double> g(kWindow * kWindow);
    double sum = 0.0;
    for (int y = 0; y < kWindow; ++y)
      for (int x = 0; x < kWindow; ++x) {
        double dy = y - (kWindow - 1) / 2.0;
        double dx = x - (kWindow - 1) / 2.0;
        double v = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
        g[y * kWindow + x] = v;
        sum += v;
      }
    for (double& v : g) v /= sum;
    return g;
  }();
  return win;
}

// channel-mean plane of a [C,H,W] (or [H,W]) tensor
std::vector<double> luminance(const Tensor& t, int& h, int& w) {
  if (t.rank() == 2) {
    h = t.shape()[0];
    w = t.shape()[1];
    return t.data();
  }
  if (t.rank() != 3) throw DimensionError("ssim: expected [C,H,W] or [H,W]");
  int C = t.shape()[0];
  h = t.shape()[1];
  w = t.shape()[2];
  std::size_t hw = static_cast<std::size_t>(h) * w;
  std::vector<double> lum(hw, 0.0);
  for (int c = 0; c < C; ++c)
    for (std::size_t i = 0; i < hw; ++i) lum[i] += t.data()[c * hw + i];
  for (double& v : lum) v /= C;
  return lum;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b, double max_val) {
  if (a.shape() != b.shape())
    throw DimensionError("psnr: shapes differ, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    double d = a.data()[i] - b.data()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data().size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse);
}

double ssim(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError("ssim: shapes differ, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  int h = 0, w = 0;
  std::vector<double> la = luminance(a, h, w);
  std::vector<double> lb = luminance(b, h, w);
  if (h < kWindow || w < kWindow)
    throw ParameterError("ssim: image smaller than the 11x11 window");

  const std::vector<double>& win = gaussian_window();
  double total = 0.0;
  long count = 0;
  for (int y0 = 0; y0 + kWindow <= h; ++y0) {
    for (int x0 = 0; x0 + kWindow <= w; ++x0) {
      double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int y = 0; y < kWindow; ++y)
        for (int x = 0; x < kWindow; ++x) {
          double g = win[y * kWindow + x];
          double va = la[static_cast<std::size_t>(y0 + y) * w + x0 + x];
          double vb = lb[static_cast<std::size_t>(y0 + y) * w + x0 + x];
          ma += g * va;
          mb += g * vb;
          saa += g * va * va;
          sbb += g * vb * vb;
          sab += g * va * vb;
        }
      double var_a = saa - ma * ma;
      double var_b = sbb - mb * mb;
      double cov = sab - ma * mb;
      total += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
               ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double angular_error_deg(const gaze::GazeAngles& pred, const gaze::GazeAngles& gt) {
  auto vp = gaze::angles_to_vector(pred);
  auto vg = gaze::angles_to_vector(gt);
  double dot = vp[0] * vg[0] + vp[1] * vg[1] + vp[2] * vg[2];
  dot = std::clamp(dot, -1.0, 1.0);
  return std::acos(dot) * 180.0 / 3.14159265358979323846;
}

}  // namespace haze::metrics
