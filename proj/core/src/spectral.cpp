#include "haze/spectral.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace haze::spectral {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> make_basis(int n) {
  std::vector<double> b(static_cast<std::size_t>(n) * n);
  for (int k = 0; k < n; ++k) {
    double a = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i)
      b[static_cast<std::size_t>(k) * n + i] = a * std::cos(kPi * (2 * i + 1) * k / (2.0 * n));
  }
  return b;
}

void check_plane_args(const DctPlan& plan, const Tensor& x) {
  if (x.rank() != 3)
    throw DimensionError("dct2: expected [C,H,W], got " + shape_str(x.shape()));
  if (x.shape()[1] != plan.h || x.shape()[2] != plan.w)
    throw DimensionError("dct2: plan is " + std::to_string(plan.h) + "x" + std::to_string(plan.w) +
                         ", input is " + shape_str(x.shape()));
}

// rows with basis_w, then columns with basis_h
void transform_plane(const DctPlan& plan, const double* in, double* out, bool inverse) {
  int h = plan.h, w = plan.w;
  std::vector<double> tmp(static_cast<std::size_t>(h) * w);
  const std::vector<double>& bw = plan.basis_w;
  const std::vector<double>& bh = plan.basis_h;
  for (int y = 0; y < h; ++y) {
    const double* row = &in[static_cast<std::size_t>(y) * w];
    double* trow = &tmp[static_cast<std::size_t>(y) * w];
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      if (!inverse) {
        const double* b = &bw[static_cast<std::size_t>(u) * w];
        for (int x = 0; x < w; ++x) acc += row[x] * b[x];
      } else {
        for (int v = 0; v < w; ++v) acc += row[v] * bw[static_cast<std::size_t>(v) * w + u];
      }
      trow[u] = acc;
    }
  }
  for (int u = 0; u < w; ++u) {
    for (int v = 0; v < h; ++v) {
      double acc = 0.0;
      if (!inverse) {
        const double* b = &bh[static_cast<std::size_t>(v) * h];
        for (int y = 0; y < h; ++y) acc += tmp[static_cast<std::size_t>(y) * w + u] * b[y];
      } else {
        for (int k = 0; k < h; ++k)
          acc += tmp[static_cast<std::size_t>(k) * w + u] * bh[static_cast<std::size_t>(k) * h + v];
      }
      out[static_cast<std::size_t>(v) * w + u] = acc;
    }
  }
}

}  // namespace

DctPlan make_plan(int h, int w) {
  if (h < 1 || w < 1) throw ParameterError("DctPlan: extents must be >= 1");
  DctPlan plan;
  plan.h = h;
  plan.w = w;
  plan.basis_h = make_basis(h);
  plan.basis_w = make_basis(w);
  return plan;
}

const DctPlan& shared_plan(int h, int w) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<DctPlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{h, w}];
  if (!slot) slot = std::make_unique<DctPlan>(make_plan(h, w));
  return *slot;
}

void dct2_plane(const DctPlan& plan, const double* in, double* out) {
  transform_plane(plan, in, out, false);
}

void idct2_plane(const DctPlan& plan, const double* in, double* out) {
  transform_plane(plan, in, out, true);
}

SpectralMask build_mask(int h, int w, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ParameterError("build_mask: lambda must be in [0,1], got " + std::to_string(lambda));
  if (h < 1 || w < 1) throw ParameterError("build_mask: extents must be >= 1");
  SpectralMask m;
  m.h = h;
  m.w = w;
  m.lambda = lambda;
  m.bits.resize(static_cast<std::size_t>(h) * w);
  double cut = 2.0 * lambda * h;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      m.bits[static_cast<std::size_t>(y) * w + x] = (y < cut - x) ? 0 : 1;
  return m;
}

void hf_extract_plane(const DctPlan& plan, const SpectralMask& mask,
                      const double* in, double* out) {
  std::vector<double> spec(static_cast<std::size_t>(plan.h) * plan.w);
  dct2_plane(plan, in, spec.data());
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (!mask.bits[i]) spec[i] = 0.0;
  idct2_plane(plan, spec.data(), out);
}

namespace {

enum class Kind { kForward, kInverse };

Tensor transform_op(const char* name, const DctPlan& plan, const Tensor& x, Kind kind) {
  check_plane_args(plan, x);
  int C = x.shape()[0];
  std::size_t hw = static_cast<std::size_t>(plan.h) * plan.w;
  std::vector<double> out(x.data().size());
  for (int c = 0; c < C; ++c)
    transform_plane(plan, &x.data()[c * hw], &out[c * hw], kind == Kind::kInverse);
  auto xn = x.node();
  int h = plan.h, w = plan.w;
  // adjoint of the orthonormal forward transform is the inverse, and vice versa
  return detail::make_op(name, x.shape(), std::move(out), {x},
                         [xn, h, w, C, hw, kind](TensorNode& self) {
    const DctPlan& p = shared_plan(h, w);
    std::vector<double> g(hw);
    xn->ensure_grad();
    for (int c = 0; c < C; ++c) {
      transform_plane(p, &self.grad[c * hw], g.data(), kind == Kind::kForward);
      for (std::size_t i = 0; i < hw; ++i) xn->grad[c * hw + i] += g[i];
    }
  });
}

}  // namespace

Tensor dct2(const DctPlan& plan, const Tensor& x) {
  return transform_op("dct2", plan, x, Kind::kForward);
}

Tensor idct2(const DctPlan& plan, const Tensor& x) {
  return transform_op("idct2", plan, x, Kind::kInverse);
}

Tensor dct2(const Tensor& x) {
  if (x.rank() != 3) throw DimensionError("dct2: expected [C,H,W]");
  return dct2(shared_plan(x.shape()[1], x.shape()[2]), x);
}

Tensor idct2(const Tensor& x) {
  if (x.rank() != 3) throw DimensionError("idct2: expected [C,H,W]");
  return idct2(shared_plan(x.shape()[1], x.shape()[2]), x);
}

Tensor hf_extract(const Tensor& x, double lambda) {
  if (x.rank() != 3) throw DimensionError("hf_extract: expected [C,H,W]");
  int C = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const DctPlan& plan = shared_plan(h, w);
  SpectralMask mask = build_mask(h, w, lambda);
  std::size_t hw = static_cast<std::size_t>(h) * w;
  std::vector<double> out(x.data().size());
  for (int c = 0; c < C; ++c)
    hf_extract_plane(plan, mask, &x.data()[c * hw], &out[c * hw]);
  auto xn = x.node();
  // masked projection in an orthonormal basis is self-adjoint
  return detail::make_op("hf_extract", x.shape(), std::move(out), {x},
                         [xn, mask, C, hw, h, w](TensorNode& self) {
    const DctPlan& p = shared_plan(h, w);
    std::vector<double> g(hw);
    xn->ensure_grad();
    for (int c = 0; c < C; ++c) {
      hf_extract_plane(p, mask, &self.grad[c * hw], g.data());
      for (std::size_t i = 0; i < hw; ++i) xn->grad[c * hw + i] += g[i];
    }
  });
}

}  // namespace haze::spectral
