#include "haze/resize.hpp"

#include <algorithm>
#include <cmath>

namespace haze::data {

namespace {

// Keys cubic, a = -0.5
double keys(double x) {
  x = std::fabs(x);
  if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
  if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
  return 0.0;
}

void apply_axis_rows(const ResizeAxisPlan& plan, const double* in, int rows, double* out) {
  // resample the last (contiguous) axis of a rows x plan.in block
  for (int r = 0; r < rows; ++r) {
    const double* src = &in[static_cast<std::size_t>(r) * plan.in];
    double* dst = &out[static_cast<std::size_t>(r) * plan.out];
    for (int o = 0; o < plan.out; ++o) {
      const int* idx = &plan.index[static_cast<std::size_t>(o) * plan.taps];
      const double* wgt = &plan.weight[static_cast<std::size_t>(o) * plan.taps];
      double acc = 0.0;
      for (int t = 0; t < plan.taps; ++t) acc += wgt[t] * src[idx[t]];
      dst[o] = acc;
    }
  }
}

void transpose_hw(const double* in, int h, int w, double* out) {
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out[static_cast<std::size_t>(x) * h + y] = in[static_cast<std::size_t>(y) * w + x];
}

std::vector<double> resize_plane(const ResizeAxisPlan& row_plan, const ResizeAxisPlan& col_plan,
                                 const double* in) {
  // rows (W axis), then columns via transpose
  std::vector<double> tmp(static_cast<std::size_t>(col_plan.in) * row_plan.out);
  apply_axis_rows(row_plan, in, col_plan.in, tmp.data());
  std::vector<double> tmp_t(tmp.size());
  transpose_hw(tmp.data(), col_plan.in, row_plan.out, tmp_t.data());
  std::vector<double> out_t(static_cast<std::size_t>(row_plan.out) * col_plan.out);
  apply_axis_rows(col_plan, tmp_t.data(), row_plan.out, out_t.data());
  std::vector<double> out(out_t.size());
  transpose_hw(out_t.data(), row_plan.out, col_plan.out, out.data());
  return out;
}

std::vector<double> resize_channels(const Tensor& img, const ResizeAxisPlan& row_plan,
                                    const ResizeAxisPlan& col_plan) {
  int C = img.shape()[0];
  std::size_t in_hw = static_cast<std::size_t>(col_plan.in) * row_plan.in;
  std::size_t out_hw = static_cast<std::size_t>(col_plan.out) * row_plan.out;
  std::vector<double> out(C * out_hw);
  for (int c = 0; c < C; ++c) {
    auto plane = resize_plane(row_plan, col_plan, &img.data()[c * in_hw]);
    std::copy(plane.begin(), plane.end(), out.begin() + c * out_hw);
  }
  return out;
}

void check_image(const Tensor& img) {
  if (img.rank() != 3)
    throw DimensionError("bicubic_resize: expected [C,H,W], got " + shape_str(img.shape()));
}

}  // namespace

ResizeAxisPlan make_axis_plan(int in_extent, int out_extent, double scale) {
  if (in_extent < 1 || out_extent < 1)
    throw DimensionError("bicubic_resize: degenerate extent");
  ResizeAxisPlan plan;
  plan.in = in_extent;
  plan.out = out_extent;
  double k = scale < 1.0 ? scale : 1.0;  // antialias widening on downscale
  double width = 4.0 / k;
  plan.taps = static_cast<int>(std::ceil(width)) + 2;
  plan.index.resize(static_cast<std::size_t>(plan.out) * plan.taps);
  plan.weight.resize(plan.index.size());
  for (int o = 0; o < plan.out; ++o) {
    double u = (o + 0.5) / scale - 0.5;
    int left = static_cast<int>(std::floor(u - width / 2.0)) + 1;
    double sum = 0.0;
    for (int t = 0; t < plan.taps; ++t) {
      double wv = k * keys(k * (u - (left + t)));
      plan.weight[static_cast<std::size_t>(o) * plan.taps + t] = wv;
      sum += wv;
    }
    for (int t = 0; t < plan.taps; ++t) {
      std::size_t at = static_cast<std::size_t>(o) * plan.taps + t;
      plan.weight[at] /= sum;
      plan.index[at] = std::clamp(left + t, 0, in_extent - 1);
    }
  }
  return plan;
}

Tensor bicubic_resize(const Tensor& img, double factor) {
  check_image(img);
  if (!(factor > 0.0)) throw ParameterError("bicubic_resize: factor must be > 0");
  int H = img.shape()[1], W = img.shape()[2];
  int Ho = static_cast<int>(std::ceil(H * factor));
  int Wo = static_cast<int>(std::ceil(W * factor));
  if (Ho < 1 || Wo < 1) throw DimensionError("bicubic_resize: degenerate output");
  auto row_plan = make_axis_plan(W, Wo, factor);
  auto col_plan = make_axis_plan(H, Ho, factor);
  return Tensor::from_data({img.shape()[0], Ho, Wo}, resize_channels(img, row_plan, col_plan));
}

Tensor bicubic_resize_to(const Tensor& img, int out_h, int out_w) {
  check_image(img);
  int H = img.shape()[1], W = img.shape()[2];
  if (out_h < 1 || out_w < 1) throw DimensionError("bicubic_resize: degenerate output");
  auto row_plan = make_axis_plan(W, out_w, static_cast<double>(out_w) / W);
  auto col_plan = make_axis_plan(H, out_h, static_cast<double>(out_h) / H);
  return Tensor::from_data({img.shape()[0], out_h, out_w}, resize_channels(img, row_plan, col_plan));
}

Tensor bicubic_upsample_op(const Tensor& img, int out_h, int out_w) {
  check_image(img);
  int C = img.shape()[0], H = img.shape()[1], W = img.shape()[2];
  if (out_h < H || out_w < W)
    throw DimensionError("bicubic_upsample_op: target smaller than input");
  auto row_plan = std::make_shared<ResizeAxisPlan>(
      make_axis_plan(W, out_w, static_cast<double>(out_w) / W));
  auto col_plan = std::make_shared<ResizeAxisPlan>(
      make_axis_plan(H, out_h, static_cast<double>(out_h) / H));
  std::vector<double> out = resize_channels(img, *row_plan, *col_plan);
  auto xn = img.node();
  return detail::make_op("bicubic_upsample", {C, out_h, out_w}, std::move(out), {img},
                         [xn, row_plan, col_plan, C, H, W, out_h, out_w](TensorNode& self) {
    xn->ensure_grad();
    std::size_t out_hw = static_cast<std::size_t>(out_h) * out_w;
    std::size_t in_hw = static_cast<std::size_t>(H) * W;
    // column pass transpose of the forward: g_mid[y][ox] = sum_oy cw * g[oy][ox]
    for (int c = 0; c < C; ++c) {
      std::vector<double> mid(static_cast<std::size_t>(H) * out_w, 0.0);
      const double* g = &self.grad[c * out_hw];
      for (int oy = 0; oy < out_h; ++oy) {
        const int* cidx = &col_plan->index[static_cast<std::size_t>(oy) * col_plan->taps];
        const double* cwgt = &col_plan->weight[static_cast<std::size_t>(oy) * col_plan->taps];
        for (int t = 0; t < col_plan->taps; ++t) {
          double wv = cwgt[t];
          if (wv == 0.0) continue;
          double* mrow = &mid[static_cast<std::size_t>(cidx[t]) * out_w];
          const double* grow = &g[static_cast<std::size_t>(oy) * out_w];
          for (int ox = 0; ox < out_w; ++ox) mrow[ox] += wv * grow[ox];
        }
      }
      double* gx = &xn->grad[c * in_hw];
      for (int y = 0; y < H; ++y) {
        const double* mrow = &mid[static_cast<std::size_t>(y) * out_w];
        for (int ox = 0; ox < out_w; ++ox) {
          const int* ridx = &row_plan->index[static_cast<std::size_t>(ox) * row_plan->taps];
          const double* rwgt = &row_plan->weight[static_cast<std::size_t>(ox) * row_plan->taps];
          double gv = mrow[ox];
          if (gv == 0.0) continue;
          for (int t = 0; t < row_plan->taps; ++t)
            gx[static_cast<std::size_t>(y) * W + ridx[t]] += rwgt[t] * gv;
        }
      }
    }
  });
}

}  // namespace haze::data
