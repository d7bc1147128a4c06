#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gentle/nn/tensor.hpp"

namespace gentle::nn {

template <typename T>
struct Node {
  Tensor<T> value;
  Buffer<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  /// Adds this node's gradient into its parents' gradients.
  std::function<void(Node&)> backward;

  Buffer<T>& ensure_grad() {
    if (grad.size() != value.size()) grad = Buffer<T>::Zero(value.size());
    return grad;
  }
};

namespace detail {
inline thread_local bool grad_enabled = true;
}

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_enabled) { detail::grad_enabled = false; }
  ~NoGradGuard() { detail::grad_enabled = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Handle to a graph node. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;

  static Var constant(Tensor<T> value) { return Var(std::move(value), false); }
  static Var parameter(Tensor<T> value) { return Var(std::move(value), true); }

  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape; }
  const Buffer<T>& data() const { return node_->value.data; }
  bool requires_grad() const { return node_->requires_grad; }

  /// Gradient buffer, zero-filled on first access.
  Buffer<T>& grad() { return node_->ensure_grad(); }
  void zero_grad() {
    if (node_->grad.size()) node_->grad.setZero();
  }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& ptr() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

  /// Result of an operator. The backward closure is kept only when
  /// recording is enabled and some parent needs a gradient.
  static Var result(Tensor<T> value, const std::vector<Var>& parents, std::function<void(Node<T>&)> backward) {
    Var out(std::move(value), false);
    if (!detail::grad_enabled) return out;
    bool any = false;
    for (const auto& p : parents) any = any || p.requires_grad();
    if (!any) return out;
    out.node_->requires_grad = true;
    for (const auto& p : parents) out.node_->parents.push_back(p.node_);
    out.node_->backward = std::move(backward);
    return out;
  }

 private:
  Var(Tensor<T> value, bool requires_grad) : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  std::shared_ptr<Node<T>> node_;
};

/// Reverse sweep from a scalar. Parameter gradients accumulate across calls
/// until zero_grad.
template <typename T>
void backward(const Var<T>& loss) {
  if (loss.value().size() != 1) throw ShapeError("backward: loss must be a scalar, got " + to_string(loss.shape()));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{loss.node(), 0}};
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->ensure_grad().setConstant(T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward) {
      n->ensure_grad();
      n->backward(*n);
    }
  }
  // Interior gradients are scratch; keep only leaf gradients.
  for (Node<T>* n : order)
    if (n->backward) n->grad.resize(0);
}

}  // namespace gentle::nn
