#pragma once

#include <functional>

#include "canvolve/tape.hpp"

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

/// Scalar-valued function recorded on a fresh tape for each evaluation.
using ScalarFunction = std::function<Var(Tape&, Var)>;

/// max_i |analytic_i - central_i| / max(|analytic_i|, |central_i|, 1e-12),
/// with central differences of half-width `step`. Meaningful in f64 builds.
/// Throws std::invalid_argument if `f` returns a non-scalar.
double grad_check(const ScalarFunction& f, const Tensor& x, double step);

/// Analytic gradient of `f` at `x`.
Tensor gradient(const ScalarFunction& f, const Tensor& x);

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
