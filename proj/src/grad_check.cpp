#include "canvolve/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

namespace {

double evaluate(const ScalarFunction& f, const Tensor& x) {
  Tape tape;
  const Var out = f(tape, tape.parameter(x));
  const Tensor& v = tape.value(out);
  if (v.size() != 1) {
    throw std::invalid_argument("grad_check: function returned shape " +
                                to_string(v.shape()));
  }
  return static_cast<double>(v[0]);
}

}  // namespace

Tensor gradient(const ScalarFunction& f, const Tensor& x) {
  Tape tape;
  const Var in = tape.parameter(x);
  const Var out = f(tape, in);
  if (tape.value(out).size() != 1) {
    throw std::invalid_argument("gradient: function returned shape " +
                                to_string(tape.value(out).shape()));
  }
  tape.backward(out);
  return tape.grad(in);
}

double grad_check(const ScalarFunction& f, const Tensor& x, double step) {
  const Tensor analytic = gradient(f, x);
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    // Divide by the perturbation actually stored, not the nominal 2 * step.
    probe[i] = static_cast<Real>(static_cast<double>(x[i]) + step);
    const double hi = static_cast<double>(probe[i]);
    const double plus = evaluate(f, probe);
    probe[i] = static_cast<Real>(static_cast<double>(x[i]) - step);
    const double lo = static_cast<double>(probe[i]);
    const double minus = evaluate(f, probe);
    probe[i] = x[i];
    const double central = (plus - minus) / (hi - lo);
    const double a = static_cast<double>(analytic[i]);
    const double denom = std::max({std::abs(a), std::abs(central), 1e-12});
    worst = std::max(worst, std::abs(a - central) / denom);
  }
  return worst;
}

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
