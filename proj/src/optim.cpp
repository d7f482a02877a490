#include "canvolve/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

double poly_decay_lr(int epoch, const Schedule& schedule) {
  if (schedule.total_epochs <= 0) {
    throw std::invalid_argument("schedule needs a positive epoch count");
  }
  if (epoch < 0 || epoch > schedule.total_epochs) {
    throw std::out_of_range("epoch " + std::to_string(epoch) + " outside [0, " +
                            std::to_string(schedule.total_epochs) + "]");
  }
  const double frac = 1.0 - static_cast<double>(epoch) / schedule.total_epochs;
  return schedule.initial_lr * std::pow(frac, schedule.power);
}

void adam_step(std::vector<Parameter>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr) {
  if (grads.size() != params.size()) {
    throw std::invalid_argument("adam_step: " + std::to_string(grads.size()) +
                                " gradients for " + std::to_string(params.size()) +
                                " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_shape(grads[i], params[i].value.shape(), "adam_step gradient");
    if (!grads[i].all_finite()) {
      throw NumericError("non-finite gradient for parameter '" + params[i].name +
                         "'");
    }
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value.shape());
      state.v.emplace_back(p.value.shape());
    }
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state does not match parameters");
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Real* p = params[i].value.data();
    Real* m = state.m[i].data();
    Real* v = state.v[i].data();
    const Real* g = grads[i].data();
    for (std::size_t j = 0; j < params[i].value.size(); ++j) {
      const double gj = g[j];
      const double mj = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      const double vj = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      m[j] = static_cast<Real>(mj);
      v[j] = static_cast<Real>(vj);
      const double update = lr * (mj / c1) / (std::sqrt(vj / c2) + state.epsilon);
      p[j] = static_cast<Real>(p[j] - update);
    }
  }
}

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
