#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "srcn/errors.hpp"
#include "srcn/tensor.hpp"

namespace srcn {

enum class Mode { Train, Infer };

/// Reverse-mode tape. Every differentiable op appends one node whose
/// closure pulls the output gradient and accumulates into the inputs'
/// gradients. Inputs of a node are always recorded before the node, so a
/// single reverse sweep visits each node exactly once in valid order.
class Tape {
 public:
  void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

  /// Seeds d(loss)/d(loss) = 1 and runs the reverse sweep. Gradients of
  /// parameters that appear in several nodes (e.g. LSTM weights across
  /// time steps) accumulate by summation.
  void backward(const TensorPtr& loss) {
    if (!loss || loss->size() != 1) throw ShapeError("backward: loss must be a scalar tensor");
    if (nodes_.empty()) throw ShapeError("backward: tape is empty");
    if (consumed_) throw ShapeError("backward: tape already consumed; reset() first");
    consumed_ = true;
    loss->ensure_grad();
    loss->grad[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

  void reset() {
    nodes_.clear();
    consumed_ = false;
  }

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  std::vector<std::function<void()>> nodes_;
  bool consumed_ = false;
};

namespace detail {

/// True when the node should be recorded: a live tape and at least one
/// differentiable input.
template <typename... Ts>
inline bool tracing(const Tape* tape, const Ts&... inputs) {
  if (!tape) return false;
  return ((inputs && inputs->requires_grad) || ...);
}

}  // namespace detail

}  // namespace srcn
