#include "canvolve/tape.hpp"

#include <atomic>
#include <stdexcept>

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

namespace {
std::atomic<std::uint64_t> next_tape_id{1};
}

const Tensor& BackwardContext::output() const {
  return tape_->nodes_[node_].value;
}

const Tensor& BackwardContext::input(std::size_t i) const {
  return tape_->value(tape_->nodes_[node_].inputs.at(i));
}

std::size_t BackwardContext::num_inputs() const {
  return tape_->nodes_[node_].inputs.size();
}

bool BackwardContext::needs_grad(std::size_t i) const {
  return tape_->requires_grad(tape_->nodes_[node_].inputs.at(i));
}

void BackwardContext::accumulate(std::size_t i, Tensor grad) {
  const auto target = tape_->nodes_[node_].inputs.at(i).index;
  auto& slot = tape_->grads_[target];
  if (grad.shape() != tape_->nodes_[target].value.shape()) {
    throw std::logic_error("op '" + tape_->nodes_[node_].op +
                           "' produced gradient of shape " +
                           to_string(grad.shape()) + " for input of shape " +
                           to_string(tape_->nodes_[target].value.shape()));
  }
  if (slot.empty()) {
    slot = std::move(grad);
  } else {
    canvolve::accumulate(slot, grad);
  }
}

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

Var Tape::constant(Tensor value) {
  return record("constant", std::move(value), {}, nullptr);
}

Var Tape::parameter(Tensor value) {
  Var v = record("parameter", std::move(value), {}, nullptr);
  nodes_.back().requires_grad = true;
  return v;
}

Var Tape::record(std::string_view op, Tensor value, std::vector<Var> inputs,
                 BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by op '" + std::string(op) +
                       "'");
  }
  bool needs = false;
  for (const Var& in : inputs) needs = needs || requires_grad(in);
  Node node{std::string(op), std::move(value), std::move(inputs),
            needs ? std::move(backward) : nullptr, needs};
  nodes_.push_back(std::move(node));
  return {id_, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

std::uint32_t Tape::check(Var v) const {
  if (v.tape_id != id_ || v.index >= nodes_.size()) {
    throw std::invalid_argument("variable handle is not on this tape");
  }
  return v.index;
}

const Tensor& Tape::value(Var v) const { return nodes_[check(v)].value; }

bool Tape::requires_grad(Var v) const { return nodes_[check(v)].requires_grad; }

std::string_view Tape::op_name(Var v) const { return nodes_[check(v)].op; }

void Tape::backward(Var loss) {
  const auto root = check(loss);
  if (nodes_[root].value.size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got shape " +
                                to_string(nodes_[root].value.shape()));
  }
  grads_.assign(nodes_.size(), Tensor{});
  grads_[root] = Tensor(nodes_[root].value.shape(), Real{1});
  for (std::uint32_t i = root + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || grads_[i].empty()) continue;
    // Inputs always precede node i, so this slot is not written below.
    const Tensor& g = grads_[i];
    BackwardContext ctx(*this, i, g);
    node.backward(ctx);
    for (const Var& in : node.inputs) {
      const auto& slot = grads_[in.index];
      if (!slot.empty() && !slot.all_finite()) {
        throw NumericError("non-finite gradient flowing out of op '" + node.op +
                           "'");
      }
    }
  }
}

Tensor Tape::grad(Var v) const {
  const auto i = check(v);
  if (i < grads_.size() && !grads_[i].empty()) return grads_[i];
  return Tensor(nodes_[i].value.shape(), Real{0});
}

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
