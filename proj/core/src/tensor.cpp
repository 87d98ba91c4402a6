#include "haze/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

namespace haze {

namespace {

std::atomic<std::uint64_t> g_seq{0};

std::shared_ptr<TensorNode> new_node(Shape shape, std::vector<double> data) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->seq = ++g_seq;
  return n;
}

}  // namespace

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  for (int e : shape)
    if (e <= 0) throw DimensionError("tensor extent must be positive, got " + shape_str(shape));
  auto n = new_node(shape, std::vector<double>(shape_numel(shape), value));
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
    throw DimensionError("data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  auto n = new_node(std::move(shape), std::move(data));
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

Tensor Tensor::uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad) {
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = rng.uniform(lo, hi);
  return from_data(std::move(shape), std::move(data), requires_grad);
}

std::vector<double>& Tensor::data_mut() {
  if (!node_->is_leaf())
    throw UsageError("in-place mutation is only allowed on leaf tensors");
  return node_->data;
}

void Tensor::set_requires_grad(bool on) {
  if (!node_->is_leaf())
    throw UsageError("requires_grad can only be toggled on leaf tensors");
  node_->requires_grad = on;
}

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::value() const {
  if (node_->data.size() != 1)
    throw UsageError("value() requires a single-element tensor, shape is " + shape_str(node_->shape));
  return node_->data[0];
}

double Tensor::at(std::initializer_list<int> idx) const {
  const Shape& s = node_->shape;
  if (idx.size() != s.size()) throw DimensionError("index rank mismatch");
  std::int64_t flat = 0;
  std::size_t d = 0;
  for (int i : idx) {
    if (i < 0 || i >= s[d]) throw DimensionError("index out of range");
    flat = flat * s[d] + i;
    ++d;
  }
  return node_->data[flat];
}

Tensor Tensor::clone_detached(bool requires_grad) const {
  return from_data(node_->shape, node_->data, requires_grad);
}

namespace detail {

Tensor make_op(const char* name, Shape shape, std::vector<double> data,
               const std::vector<Tensor>& inputs,
               std::function<void(TensorNode&)> backprop) {
  auto n = new_node(std::move(shape), std::move(data));
  n->op = name;
  bool needs_grad = false;
  for (const Tensor& t : inputs) {
    n->parents.push_back(t.node());
    needs_grad = needs_grad || t.node()->requires_grad;
  }
  if (needs_grad) {
    n->requires_grad = true;
    n->backprop = std::move(backprop);
  }
  return Tensor(std::move(n));
}

}  // namespace detail

namespace {

// Broadcast classification for binary elementwise ops.
enum class Bcast { kNone, kPerChannel };

Bcast classify(const Shape& a, const Shape& b, const char* opname) {
  if (a == b) return Bcast::kNone;
  if (a.size() == 3) {
    if (b.size() == 1 && b[0] == a[0]) return Bcast::kPerChannel;
    if (b.size() == 3 && b[0] == a[0] && b[1] == 1 && b[2] == 1) return Bcast::kPerChannel;
  }
  throw DimensionError(std::string(opname) + ": shapes " + shape_str(a) + " and " +
                       shape_str(b) + " are neither equal nor per-channel broadcastable");
}

template <class Fwd, class Bwd>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, Fwd fwd, Bwd bwd) {
  Bcast bc = classify(a.shape(), b.shape(), name);
  const auto& ad = a.data();
  const auto& bd = b.data();
  std::vector<double> out(ad.size());
  if (bc == Bcast::kNone) {
    for (std::size_t i = 0; i < ad.size(); ++i) out[i] = fwd(ad[i], bd[i]);
  } else {
    std::int64_t hw = a.shape()[1] * a.shape()[2];
    for (int c = 0; c < a.shape()[0]; ++c) {
      double bv = bd[c];
      for (std::int64_t i = 0; i < hw; ++i) out[c * hw + i] = fwd(ad[c * hw + i], bv);
    }
  }
  auto an = a.node();
  auto bn = b.node();
  return detail::make_op(name, a.shape(), std::move(out), {a, b},
                         [an, bn, bc, bwd](TensorNode& self) {
    std::int64_t hw = bc == Bcast::kPerChannel
                          ? static_cast<std::int64_t>(self.shape[1]) * self.shape[2]
                          : 0;
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        double bv = bc == Bcast::kNone ? bn->data[i] : bn->data[i / hw];
        an->grad[i] += self.grad[i] * bwd(an->data[i], bv).first;
      }
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        std::size_t bi = bc == Bcast::kNone ? i : static_cast<std::size_t>(i / hw);
        double bv = bn->data[bi];
        bn->grad[bi] += self.grad[i] * bwd(an->data[i], bv).second;
      }
    }
  });
}

template <class Fwd, class Bwd>
Tensor unary_op(const char* name, const Tensor& x, Fwd fwd, Bwd bwd) {
  const auto& xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = fwd(xd[i]);
  auto xn = x.node();
  return detail::make_op(name, x.shape(), std::move(out), {x},
                         [xn, bwd](TensorNode& self) {
    xn->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      xn->grad[i] += self.grad[i] * bwd(xn->data[i], self.data[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op("add", a, b, [](double x, double y) { return x + y; },
                   [](double, double) { return std::pair<double, double>{1.0, 1.0}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op("sub", a, b, [](double x, double y) { return x - y; },
                   [](double, double) { return std::pair<double, double>{1.0, -1.0}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op("mul", a, b, [](double x, double y) { return x * y; },
                   [](double x, double y) { return std::pair<double, double>{y, x}; });
}

Tensor relu(const Tensor& x) {
  return unary_op("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
                  [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return unary_op("leaky_relu", x,
                  [slope](double v) { return v >= 0.0 ? v : slope * v; },
                  [slope](double v, double) { return v >= 0.0 ? 1.0 : slope; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op("sigmoid", x,
                  [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                  [](double, double y) { return y * (1.0 - y); });
}

Tensor scale(const Tensor& x, double c) {
  return unary_op("scale", x, [c](double v) { return c * v; },
                  [c](double, double) { return c; });
}

Tensor abs(const Tensor& x) {
  return unary_op("abs", x, [](double v) { return std::fabs(v); },
                  [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  auto xn = x.node();
  return detail::make_op("sum", {1}, {acc}, {x}, [xn](TensorNode& self) {
    xn->ensure_grad();
    double g = self.grad[0];
    for (double& v : xn->grad) v += g;
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.size())
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  auto xn = x.node();
  return detail::make_op("reshape", std::move(shape), x.data(), {x}, [xn](TensorNode& self) {
    xn->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) xn->grad[i] += self.grad[i];
  });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.shape()[1] != b.shape()[1] || a.shape()[2] != b.shape()[2])
    throw DimensionError("concat_channels: incompatible shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
  std::vector<double> out;
  out.reserve(a.data().size() + b.data().size());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  Shape shape{a.shape()[0] + b.shape()[0], a.shape()[1], a.shape()[2]};
  auto an = a.node();
  auto bn = b.node();
  std::size_t na = a.data().size();
  return detail::make_op("concat_channels", std::move(shape), std::move(out), {a, b},
                         [an, bn, na](TensorNode& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < na; ++i) an->grad[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = na; i < self.grad.size(); ++i) bn->grad[i - na] += self.grad[i];
    }
  });
}

Tensor concat_flat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw UsageError("concat_flat: no inputs");
  std::vector<double> out;
  for (const Tensor& t : parts) out.insert(out.end(), t.data().begin(), t.data().end());
  std::vector<std::shared_ptr<TensorNode>> nodes;
  for (const Tensor& t : parts) nodes.push_back(t.node());
  Shape shape{static_cast<int>(out.size())};
  return detail::make_op("concat_flat", std::move(shape), std::move(out), parts,
                         [nodes](TensorNode& self) {
    std::size_t off = 0;
    for (const auto& n : nodes) {
      if (n->requires_grad) {
        n->ensure_grad();
        for (std::size_t i = 0; i < n->data.size(); ++i) n->grad[i] += self.grad[off + i];
      }
      off += n->data.size();
    }
  });
}

Tensor crop2d(const Tensor& x, int y0, int x0, int h, int w) {
  if (x.rank() != 3) throw DimensionError("crop2d: expected [C,H,W], got " + shape_str(x.shape()));
  int C = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
  if (h < 1 || w < 1 || y0 < 0 || x0 < 0 || y0 + h > H || x0 + w > W)
    throw DimensionError("crop2d: window out of bounds");
  std::vector<double> out(static_cast<std::size_t>(C) * h * w);
  const auto& xd = x.data();
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        out[(static_cast<std::size_t>(c) * h + i) * w + j] =
            xd[(static_cast<std::size_t>(c) * H + y0 + i) * W + x0 + j];
  auto xn = x.node();
  return detail::make_op("crop2d", {C, h, w}, std::move(out), {x},
                         [xn, y0, x0, h, w, H, W, C](TensorNode& self) {
    xn->ensure_grad();
    for (int c = 0; c < C; ++c)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
          xn->grad[(static_cast<std::size_t>(c) * H + y0 + i) * W + x0 + j] +=
              self.grad[(static_cast<std::size_t>(c) * h + i) * w + j];
  });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int padding) {
  if (x.rank() != 3) throw DimensionError("conv2d: input must be [C,H,W], got " + shape_str(x.shape()));
  if (w.rank() != 4) throw DimensionError("conv2d: kernel must be [Co,Ci,kh,kw], got " + shape_str(w.shape()));
  int Ci = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
  int Co = w.shape()[0], kh = w.shape()[2], kw = w.shape()[3];
  if (w.shape()[1] != Ci)
    throw DimensionError("conv2d: kernel expects " + std::to_string(w.shape()[1]) +
                         " input channels, input has " + std::to_string(Ci));
  if (kh % 2 == 0 || kw % 2 == 0) throw DimensionError("conv2d: kernel extents must be odd");
  if (b.rank() != 1 || b.shape()[0] != Co)
    throw DimensionError("conv2d: bias must be [Co]");
  if (stride < 1) throw DimensionError("conv2d: stride must be >= 1");
  int Ho = (H + 2 * padding - kh) / stride + 1;
  int Wo = (W + 2 * padding - kw) / stride + 1;
  if (H + 2 * padding < kh || W + 2 * padding < kw || Ho < 1 || Wo < 1)
    throw DimensionError("conv2d: non-positive output extent");

  const auto& xd = x.data();
  const auto& wd = w.data();
  const auto& bd = b.data();
  std::vector<double> out(static_cast<std::size_t>(Co) * Ho * Wo);
  for (int co = 0; co < Co; ++co) {
    for (int oy = 0; oy < Ho; ++oy) {
      for (int ox = 0; ox < Wo; ++ox) {
        double acc = bd[co];
        int iy0 = oy * stride - padding;
        int ix0 = ox * stride - padding;
        for (int ci = 0; ci < Ci; ++ci) {
          const double* xp = &xd[static_cast<std::size_t>(ci) * H * W];
          const double* wp = &wd[((static_cast<std::size_t>(co) * Ci + ci) * kh) * kw];
          for (int ky = 0; ky < kh; ++ky) {
            int iy = iy0 + ky;
            if (iy < 0 || iy >= H) continue;
            for (int kx = 0; kx < kw; ++kx) {
              int ix = ix0 + kx;
              if (ix < 0 || ix >= W) continue;
              acc += wp[ky * kw + kx] * xp[iy * W + ix];
            }
          }
        }
        out[(static_cast<std::size_t>(co) * Ho + oy) * Wo + ox] = acc;
      }
    }
  }

  auto xn = x.node();
  auto wn = w.node();
  auto bn = b.node();
  return detail::make_op("conv2d", {Co, Ho, Wo}, std::move(out), {x, w, b},
                         [=](TensorNode& self) {
    bool gx = xn->requires_grad, gw = wn->requires_grad, gb = bn->requires_grad;
    if (gx) xn->ensure_grad();
    if (gw) wn->ensure_grad();
    if (gb) bn->ensure_grad();
    for (int co = 0; co < Co; ++co) {
      for (int oy = 0; oy < Ho; ++oy) {
        for (int ox = 0; ox < Wo; ++ox) {
          double g = self.grad[(static_cast<std::size_t>(co) * Ho + oy) * Wo + ox];
          if (g == 0.0) continue;
          if (gb) bn->grad[co] += g;
          int iy0 = oy * stride - padding;
          int ix0 = ox * stride - padding;
          for (int ci = 0; ci < Ci; ++ci) {
            std::size_t xoff = static_cast<std::size_t>(ci) * H * W;
            std::size_t woff = (static_cast<std::size_t>(co) * Ci + ci) * kh * kw;
            for (int ky = 0; ky < kh; ++ky) {
              int iy = iy0 + ky;
              if (iy < 0 || iy >= H) continue;
              for (int kx = 0; kx < kw; ++kx) {
                int ix = ix0 + kx;
                if (ix < 0 || ix >= W) continue;
                if (gx) xn->grad[xoff + iy * W + ix] += g * wn->data[woff + ky * kw + kx];
                if (gw) wn->grad[woff + ky * kw + kx] += g * xn->data[xoff + iy * W + ix];
              }
            }
          }
        }
      }
    }
  });
}

Tensor matmul_fc(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 1 || w.rank() != 2 || b.rank() != 1)
    throw DimensionError("matmul_fc: expected x[n], w[m,n], b[m]");
  int n = x.shape()[0], m = w.shape()[0];
  if (w.shape()[1] != n || b.shape()[0] != m)
    throw DimensionError("matmul_fc: inner dimensions disagree, x" + shape_str(x.shape()) +
                         " w" + shape_str(w.shape()) + " b" + shape_str(b.shape()));
  const auto& xd = x.data();
  const auto& wd = w.data();
  std::vector<double> out(m);
  for (int i = 0; i < m; ++i) {
    double acc = b.data()[i];
    const double* row = &wd[static_cast<std::size_t>(i) * n];
    for (int j = 0; j < n; ++j) acc += row[j] * xd[j];
    out[i] = acc;
  }
  auto xn = x.node();
  auto wn = w.node();
  auto bn = b.node();
  return detail::make_op("matmul_fc", {m}, std::move(out), {x, w, b},
                         [xn, wn, bn, m, n](TensorNode& self) {
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (int i = 0; i < m; ++i) {
        double g = self.grad[i];
        const double* row = &wn->data[static_cast<std::size_t>(i) * n];
        for (int j = 0; j < n; ++j) xn->grad[j] += g * row[j];
      }
    }
    if (wn->requires_grad) {
      wn->ensure_grad();
      for (int i = 0; i < m; ++i) {
        double g = self.grad[i];
        double* row = &wn->grad[static_cast<std::size_t>(i) * n];
        for (int j = 0; j < n; ++j) row[j] += g * xn->data[j];
      }
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (int i = 0; i < m; ++i) bn->grad[i] += self.grad[i];
    }
  });
}

Tensor global_avg_pool(const Tensor& x) {
  if (x.rank() != 3) throw DimensionError("global_avg_pool: expected [C,H,W]");
  int C = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
  std::int64_t hw = static_cast<std::int64_t>(H) * W;
  std::vector<double> out(C);
  const auto& xd = x.data();
  for (int c = 0; c < C; ++c) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < hw; ++i) acc += xd[c * hw + i];
    out[c] = acc / static_cast<double>(hw);
  }
  auto xn = x.node();
  return detail::make_op("global_avg_pool", {C, 1, 1}, std::move(out), {x},
                         [xn, C, hw](TensorNode& self) {
    xn->ensure_grad();
    for (int c = 0; c < C; ++c) {
      double g = self.grad[c] / static_cast<double>(hw);
      for (std::int64_t i = 0; i < hw; ++i) xn->grad[c * hw + i] += g;
    }
  });
}

ComputationRecord ComputationRecord::trace(const Tensor& root) {
  ComputationRecord rec;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::shared_ptr<TensorNode>> stack{root.node()};
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    if (!n || !n->requires_grad || seen.count(n.get())) continue;
    seen.insert(n.get());
    if (!n->is_leaf()) rec.order_.push_back(n);
    for (const auto& p : n->parents) stack.push_back(p);
  }
  std::sort(rec.order_.begin(), rec.order_.end(),
            [](const auto& a, const auto& b) { return a->seq > b->seq; });
  return rec;
}

void ComputationRecord::replay_adjoints() {
  for (const auto& n : order_) {
    n->ensure_grad();
    n->backprop(*n);
  }
}

void backward(const Tensor& loss) {
  if (loss.size() != 1)
    throw UsageError("backward: loss must be scalar, shape is " + shape_str(loss.shape()));
  if (!loss.node()->requires_grad)
    throw UsageError("backward: loss does not depend on any requires_grad tensor");
  auto rec = ComputationRecord::trace(loss);
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  rec.replay_adjoints();
}

double finite_diff_check(const std::function<Tensor(const Tensor&)>& f,
                         const Tensor& x, double eps) {
  Tensor probe = x.clone_detached(true);
  Tensor loss = f(probe);
  if (loss.size() != 1) throw UsageError("finite_diff_check: f must return a scalar");
  probe.zero_grad();
  backward(loss);
  std::vector<double> analytic = probe.grad();

  Tensor work = x.clone_detached(false);
  double worst = 0.0;
  for (std::size_t i = 0; i < work.data().size(); ++i) {
    double saved = work.data()[i];
    work.data_mut()[i] = saved + eps;
    double fp = f(work).value();
    work.data_mut()[i] = saved - eps;
    double fm = f(work).value();
    work.data_mut()[i] = saved;
    double cd = (fp - fm) / (2.0 * eps);
    double denom = std::max({std::fabs(analytic[i]), std::fabs(cd), 1e-8});
    worst = std::max(worst, std::fabs(analytic[i] - cd) / denom);
  }
  return worst;
}

}  // namespace haze
