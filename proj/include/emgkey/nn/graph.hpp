#pragma once

#include "emgkey/nn/tensor.hpp"

#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

namespace emgkey::nn {

/// A value in the computation graph. Non-leaf nodes own a closure that
/// propagates their gradient into the gradients of their parents.
template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  /// Gradient buffer, zero-initialised on first use.
  Tensor<T>& grad_ref() {
    if (grad.size() != value.size()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

template <class T>
using Var = std::shared_ptr<Node<T>>;

/// Whether newly created graph nodes record gradients (thread-local).
bool grad_enabled();

/// Disables graph recording for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <class T>
Var<T> constant(Tensor<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  return n;
}

template <class T>
Var<T> parameter(Tensor<T> value) {
  auto n = constant(std::move(value));
  n->requires_grad = true;
  return n;
}

/// Result node of an operation. Records parents and the backward closure
/// only when gradients are enabled and some parent requires them.
template <class T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents,
                   std::function<void(Node<T>&)> backward_fn) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->leaf = false;
  bool any = false;
  for (const auto& p : parents) any = any || (p && p->requires_grad);
  if (grad_enabled() && any) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return n;
}

/// Reverse sweep from a scalar root; gradients accumulate into every
/// reachable node that requires them. Intermediate gradients are released
/// once propagated.
template <class T>
void backward(const Var<T>& root) {
  if (root->value.size() != 1) throw ShapeError("backward: root must be a scalar");
  if (!root->requires_grad) return;
  // Iterative post-order DFS gives a topological order of the graph.
  std::vector<Node<T>*> order;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.get(), 0}};
  std::unordered_set<const Node<T>*> done{root.get()};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p && p->requires_grad && !done.contains(p)) {
        done.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->grad_ref()[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward_fn && n->grad.size() == n->value.size()) n->backward_fn(*n);
    if (!n->leaf) n->grad = Tensor<T>();
  }
}

}  // namespace emgkey::nn
