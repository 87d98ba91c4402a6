#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "haze/errors.hpp"
#include "haze/rng.hpp"

namespace haze {

using Shape = std::vector<int>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// One node of the recorded computation. Forward ops append nodes with a
// monotonically increasing sequence number; backward replays the adjoint
// closures in reverse sequence order, each exactly once.
struct TensorNode {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until first accumulation
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backprop;  // null on leaves
  std::uint64_t seq = 0;
  const char* op = "leaf";

  bool is_leaf() const { return !backprop; }
  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
  }
};

// Value handle over a shared node. Copies alias the same storage; data is
// immutable once produced by an op, only leaves may be rewritten in place
// (parameter updates, test setups).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t size() const { return static_cast<std::int64_t>(node_->data.size()); }
  int rank() const { return static_cast<int>(node_->shape.size()); }

  const std::vector<double>& data() const { return node_->data; }
  std::vector<double>& data_mut();

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);

  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<double>& grad() const;
  void zero_grad();

  double value() const;                       // rank-0/1-element only
  double at(std::initializer_list<int> idx) const;

  Tensor clone_detached(bool requires_grad = false) const;

  std::shared_ptr<TensorNode> node() const { return node_; }
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<TensorNode> node_;
};

namespace detail {
// Builds a recorded op node. `backprop` must read node.grad and accumulate
// into the parents' grads; it is attached only when some input requires grad.
Tensor make_op(const char* name, Shape shape, std::vector<double> data,
               const std::vector<Tensor>& inputs,
               std::function<void(TensorNode&)> backprop);
}  // namespace detail

// Elementwise. Binary ops take identical shapes or a per-channel gate:
// rhs of shape [C] or [C,1,1] against lhs [C,H,W].
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope = 0.2);
Tensor sigmoid(const Tensor& x);
Tensor scale(const Tensor& x, double c);
Tensor abs(const Tensor& x);

// Reductions / layout
Tensor sum(const Tensor& x);                        // -> rank-1 scalar [1]
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat_channels(const Tensor& a, const Tensor& b);    // [Ca,H,W]+[Cb,H,W]
Tensor concat_flat(const std::vector<Tensor>& parts);        // flattened -> rank-1
Tensor crop2d(const Tensor& x, int y0, int x0, int h, int w);

// Dense layers
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int padding);
Tensor matmul_fc(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor global_avg_pool(const Tensor& x);

// Ordered trace of the ops reaching a value, newest first.
class ComputationRecord {
 public:
  static ComputationRecord trace(const Tensor& root);
  std::size_t size() const { return order_.size(); }
  const std::vector<std::shared_ptr<TensorNode>>& order() const { return order_; }
  void replay_adjoints();  // root grad must be seeded already

 private:
  std::vector<std::shared_ptr<TensorNode>> order_;
};

// Reverse-mode sweep from a scalar loss. Accumulates into every
// requires_grad leaf; repeated calls without zero_grad keep accumulating.
void backward(const Tensor& loss);

// Max over coordinates of |analytic - central difference| /
// max(|analytic|, |cd|, 1e-8), for a scalar-valued f.
double finite_diff_check(const std::function<Tensor(const Tensor&)>& f,
                         const Tensor& x, double eps);

}  // namespace haze
