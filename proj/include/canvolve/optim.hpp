#pragma once

#include <cstdint>
#include <vector>

#include "canvolve/model.hpp"

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t t = 0;
  std::vector<Tensor> m;  // first moments, parameter order
  std::vector<Tensor> v;  // second moments
};

/// lr(e) = initial_lr * (1 - e / total_epochs)^power, evaluated per epoch.
struct Schedule {
  double initial_lr = 1e-3;
  int total_epochs = 1;
  double power = 2.0;
};

/// Throws std::out_of_range for e outside [0, total_epochs].
double poly_decay_lr(int epoch, const Schedule& schedule);

/// One bias-corrected Adam update. Moments are created on first use.
/// Throws NumericError naming the parameter if any gradient is not finite;
/// nothing is updated in that case.
void adam_step(std::vector<Parameter>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr);

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
