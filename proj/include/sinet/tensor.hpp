#pragma once

// Row-major double tensor with reverse-mode autodiff.
//
// A Tensor is a cheap handle onto a shared graph node.  Ops (see ops.hpp)
// record a backward closure on the result node; backward() on a scalar loss
// runs the closures in reverse topological order.  Intermediate gradients are
// reset at the start of every backward pass; leaf gradients accumulate until
// zero_grad(), so repeated backward calls sum their contributions.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sinet/errors.hpp"

namespace sinet {

using Dim = std::int64_t;
using Shape = std::vector<Dim>;

inline Dim numel(const Shape& shape) {
  Dim n = 1;
  for (const Dim d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace detail {

inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first needed; else data.size()
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;  // null for leaves
  const char* op = "leaf";

  bool is_leaf() const { return parents.empty(); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

using NodePtr = std::shared_ptr<Node>;

}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode_flag(); }

// RAII scope in which ops do not record the graph (inference mode).
struct NoGradGuard {
  NoGradGuard() : prev_(detail::grad_mode_flag()) { detail::grad_mode_flag() = false; }
  ~NoGradGuard() { detail::grad_mode_flag() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false) {
    for (const Dim d : shape) {
      if (d < 0) throw DimensionError("Tensor: negative dimension in shape " + shape_str(shape));
    }
    if (numel(shape) != static_cast<Dim>(values.size())) {
      throw DimensionError("Tensor: shape " + shape_str(shape) + " expects " +
                           std::to_string(numel(shape)) + " values, got " +
                           std::to_string(values.size()));
    }
    node_ = std::make_shared<detail::Node>();
    node_->shape = std::move(shape);
    node_->data = std::move(values);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const Dim n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0),
                  requires_grad);
  }

  static Tensor full(Shape shape, double value, bool requires_grad = false) {
    const Dim n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value),
                  requires_grad);
  }

  static Tensor scalar(double value, bool requires_grad = false) {
    return Tensor(Shape{1}, std::vector<double>{value}, requires_grad);
  }

  static Tensor vec(std::vector<double> values, bool requires_grad = false) {
    Shape shape{static_cast<Dim>(values.size())};
    return Tensor(std::move(shape), std::move(values), requires_grad);
  }

  bool defined() const { return node_ != nullptr; }

  const Shape& shape() const { return checked()->shape; }
  int rank() const { return static_cast<int>(shape().size()); }
  Dim dim(std::size_t i) const {
    const Shape& s = shape();
    if (i >= s.size())
      throw DimensionError("Tensor::dim: axis " + std::to_string(i) + " out of range for " +
                           shape_str(s));
    return s[i];
  }
  Dim size() const { return numel(shape()); }

  const std::vector<double>& data() const { return checked()->data; }
  std::vector<double>& data() { return checked()->data; }

  double item() const {
    if (size() != 1)
      throw DimensionError("Tensor::item: expected a single element, got shape " +
                           shape_str(shape()));
    return data()[0];
  }

  // Row-major element of a rank-2 tensor; test convenience.
  double at2(Dim r, Dim c) const {
    if (rank() != 2)
      throw DimensionError("Tensor::at2: expected rank 2, got shape " + shape_str(shape()));
    return data()[static_cast<std::size_t>(r * dim(1) + c)];
  }

  bool requires_grad() const { return node_ && node_->requires_grad; }

  Tensor& set_requires_grad(bool requires_grad) {
    if (!checked()->is_leaf())
      throw UsageError("Tensor::set_requires_grad: only leaf tensors may be toggled");
    node_->requires_grad = requires_grad;
    return *this;
  }

  bool has_grad() const { return node_ && node_->grad.size() == node_->data.size(); }

  const std::vector<double>& grad() const {
    if (!has_grad()) throw UsageError("Tensor::grad: no gradient has been computed");
    return node_->grad;
  }

  std::vector<double>& mutable_grad() {
    checked()->ensure_grad();
    return node_->grad;
  }

  void zero_grad() {
    if (node_) node_->grad.assign(node_->data.size(), 0.0);
  }

  // Deep copy: fresh leaf sharing nothing, no graph history.
  Tensor clone() const {
    const detail::Node* n = checked();
    return Tensor(n->shape, n->data, n->requires_grad);
  }

  // Graph internals (used by ops.hpp and the gradient audit).
  detail::Node* node() const { return node_.get(); }
  const detail::NodePtr& node_ptr() const { return node_; }
  explicit Tensor(detail::NodePtr node) : node_(std::move(node)) {}

 private:
  detail::Node* checked() const {
    if (!node_) throw UsageError("Tensor: operation on a default-constructed tensor");
    return node_.get();
  }

  detail::NodePtr node_;
};

namespace detail {

// Assemble an op result node.  The graph (parents + closure) is recorded only
// when gradients are enabled and some parent needs them; otherwise the result
// is a plain constant leaf.
inline Tensor make_op(const char* op, Shape shape, std::vector<double> data,
                      std::vector<Tensor> parents, std::function<void(Node&)> backward_fn) {
  bool track = grad_mode_flag();
  if (track) {
    track = false;
    for (const Tensor& p : parents)
      if (p.requires_grad()) {
        track = true;
        break;
      }
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  if (track) {
    n->requires_grad = true;
    n->op = op;
    n->parents.reserve(parents.size());
    for (const Tensor& p : parents) n->parents.push_back(p.node_ptr());
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(n));
}

}  // namespace detail

// Reverse-mode sweep from a scalar loss.  Leaf gradients accumulate across
// calls; intermediate gradients are recomputed from scratch every call.
inline void backward(const Tensor& loss) {
  if (!loss.defined()) throw UsageError("backward: undefined tensor");
  detail::Node* root = loss.node();
  if (numel(root->shape) != 1)
    throw DimensionError("backward: loss must be a scalar, got shape " + shape_str(root->shape));
  if (!root->requires_grad)
    throw UsageError("backward: loss does not require grad (no differentiable inputs)");

  // Iterative post-order DFS over the requires-grad subgraph: every node is
  // emitted after all of its inputs, so the reverse order visits each node
  // only once its downstream consumers have deposited their gradient.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  struct Frame {
    detail::Node* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  visited.insert(root);
  stack.push_back({root, 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      detail::Node* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  for (detail::Node* n : order)
    if (!n->is_leaf()) n->grad.assign(n->data.size(), 0.0);
  root->ensure_grad();
  root->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

inline bool all_finite(const Tensor& t) {
  for (const double v : t.data())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace sinet
