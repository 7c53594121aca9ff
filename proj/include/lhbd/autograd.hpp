#pragma once

// Minimal tape-free reverse-mode autodiff. Every op output holds shared
// pointers to its inputs, so the graph lives exactly as long as the Vars
// built on it. backward() walks it once in reverse topological order.

#include <functional>
#include <memory>
#include <vector>

#include "lhbd/tensor.hpp"

namespace lhbd::ag {

struct Node {
  Tensor value;
  Tensor grad;  // empty until something flows in
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(const Tensor& grad_out)> backward;

  void accumulate(const Tensor& g);
};

using NodePtr = std::shared_ptr<Node>;

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  static Var constant(Tensor value) { return Var(std::move(value), false); }
  static Var parameter(Tensor value) { return Var(std::move(value), true); }

  [[nodiscard]] bool defined() const { return node_ != nullptr; }
  [[nodiscard]] const Tensor& value() const { return node_->value; }
  /// In-place access for optimizers; never use on non-leaf nodes.
  Tensor& mutable_value() { return node_->value; }
  [[nodiscard]] const Tensor& grad() const { return node_->grad; }
  [[nodiscard]] bool requires_grad() const { return node_ && node_->requires_grad; }
  [[nodiscard]] const Shape& shape() const { return node_->value.shape(); }
  void zero_grad() { node_->grad = Tensor(); }
  [[nodiscard]] const NodePtr& node() const { return node_; }

  /// Same value, cut from the graph.
  [[nodiscard]] Var detach() const { return constant(node_->value); }

 private:
  friend Var make_op(Tensor, std::vector<Var>, std::function<void(const Tensor&)>);
  explicit Var(NodePtr node) : node_(std::move(node)) {}
  NodePtr node_;
};

/// Records an op output. The backward closure receives d(loss)/d(output) and
/// must accumulate into the input nodes it captured. When grad mode is off or
/// no input needs a gradient the closure is dropped.
Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(const Tensor&)> backward);

/// Accumulates into node if it participates in differentiation.
void accumulate(const Var& v, const Tensor& g);

/// Reverse pass from a scalar.
void backward(const Var& loss);

[[nodiscard]] bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace lhbd::ag
