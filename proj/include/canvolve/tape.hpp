#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "canvolve/tensor.hpp"

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

class Tape;

/// Handle to a value recorded on a particular tape.
struct Var {
  std::uint64_t tape_id = 0;
  std::uint32_t index = std::numeric_limits<std::uint32_t>::max();

  bool valid() const { return tape_id != 0; }
};

/// View handed to an op's backward function.
class BackwardContext {
 public:
  const Tensor& grad_output() const { return *grad_output_; }
  const Tensor& output() const;
  const Tensor& input(std::size_t i) const;
  std::size_t num_inputs() const;
  bool needs_grad(std::size_t i) const;
  /// Adds `grad` to the gradient of input i.
  void accumulate(std::size_t i, Tensor grad);

 private:
  friend class Tape;
  BackwardContext(Tape& tape, std::uint32_t node, const Tensor& g)
      : tape_(&tape), node_(node), grad_output_(&g) {}

  Tape* tape_;
  std::uint32_t node_;
  const Tensor* grad_output_;
};

/// Dynamic reverse-mode tape. Nodes are appended in forward execution order;
/// backward visits them in reverse, so gradient accumulation order is fixed.
class Tape {
 public:
  using BackwardFn = std::function<void(BackwardContext&)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is reported by grad().
  Var parameter(Tensor value);

  /// Records an op output. Throws NumericError if `value` is not finite.
  Var record(std::string_view op, Tensor value, std::vector<Var> inputs,
             BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  std::string_view op_name(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Propagates d(loss)/d(node) to every node reachable from `loss`.
  /// Throws std::invalid_argument for a non-scalar loss or a foreign handle.
  void backward(Var loss);

  /// Gradient of the last backward(); zeros for unreachable nodes.
  Tensor grad(Var v) const;

 private:
  friend class BackwardContext;

  struct Node {
    std::string op;
    Tensor value;
    std::vector<Var> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::uint32_t check(Var v) const;

  std::uint64_t id_;
  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
