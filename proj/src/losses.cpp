#include "canvolve/losses.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "canvolve/nn_ops.hpp"

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

namespace {

std::atomic<std::uint64_t> g_psi_passes{0};

void require_pair(const Tensor& p, const Tensor& q, const char* what) {
  if (p.shape() != q.shape()) {
    throw std::invalid_argument(std::string(what) + ": prediction " +
                                to_string(p.shape()) + " vs truth " +
                                to_string(q.shape()));
  }
  if (p.rank() < 2) {
    throw std::invalid_argument(std::string(what) + ": expected N x K x ... tensors");
  }
}

struct ClassSums {
  double psi = 0.0;   // sum (P - Q)^2
  double sp2 = 0.0;   // sum P^2
  double sq2 = 0.0;   // sum Q^2
};

// One pass over the data per class.
std::vector<ClassSums> class_sums(const Tensor& p, const Tensor& q) {
  const std::size_t n = p.dim(0), k = p.dim(1), m = p.spatial_size();
  std::vector<ClassSums> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    ClassSums s;
    for (std::size_t b = 0; b < n; ++b) {
      const Real* pp = p.data() + (b * k + c) * m;
      const Real* qp = q.data() + (b * k + c) * m;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = static_cast<double>(pp[i]) - qp[i];
        s.psi += d * d;
        s.sp2 += static_cast<double>(pp[i]) * pp[i];
        s.sq2 += static_cast<double>(qp[i]) * qp[i];
      }
    }
    g_psi_passes.fetch_add(1, std::memory_order_relaxed);
    out[c] = s;
  }
  return out;
}

// Shared Dice / DSL evaluation; `mse_term` adds Psi / I per class.
Var dice_family(Tape& tape, Var pv, const Tensor& q, const ClassWeights& weights,
                bool mse_term, const char* name) {
  const Tensor& p = tape.value(pv);
  require_pair(p, q, name);
  weights.validate(p.dim(1));
  const auto sums = std::make_shared<std::vector<ClassSums>>(class_sums(p, q));
  const double voxels = static_cast<double>(p.dim(0) * p.spatial_size());
  const double wsum = static_cast<double>(weights.total());
  double loss = 0.0;
  for (std::size_t c = 0; c < sums->size(); ++c) {
    const auto& s = (*sums)[c];
    const double den = s.sp2 + s.sq2;
    double term = den > 0.0 ? s.psi / den : 0.0;
    if (mse_term) term += s.psi / voxels;
    loss += static_cast<double>(weights.values[c]) * term;
  }
  loss /= wsum;

  return tape.record(
      name, Tensor::scalar(static_cast<Real>(loss)), {pv},
      [q, weights, sums, voxels, wsum, mse_term](BackwardContext& ctx) {
        const Tensor& p = ctx.input(0);
        const double g = ctx.grad_output()[0];
        const std::size_t n = p.dim(0), k = p.dim(1), m = p.spatial_size();
        Tensor gp(p.shape());
        for (std::size_t c = 0; c < k; ++c) {
          const auto& s = (*sums)[c];
          const double den = s.sp2 + s.sq2;
          const double w = g * static_cast<double>(weights.values[c]) / wsum;
          // d/dP of Psi/den and Psi/I, reusing the forward sums.
          double c_diff = mse_term ? 1.0 / voxels : 0.0;
          double c_p = 0.0;
          if (den > 0.0) {
            c_diff += 1.0 / den;
            c_p = -s.psi / (den * den);
          }
          for (std::size_t b = 0; b < n; ++b) {
            const std::size_t base = (b * k + c) * m;
            for (std::size_t i = 0; i < m; ++i) {
              const double pi = p[base + i];
              const double qi = q[base + i];
              gp[base + i] =
                  static_cast<Real>(w * 2.0 * ((pi - qi) * c_diff + pi * c_p));
            }
          }
        }
        ctx.accumulate(0, std::move(gp));
      });
}

// Shared focal / weighted cross-entropy evaluation.
Var focal_family(Tape& tape, Var pv, const Tensor& q, std::vector<Real> alpha,
                 Real gamma, Real eps, const char* name) {
  const Tensor& p = tape.value(pv);
  require_pair(p, q, name);
  const std::size_t n = p.dim(0), k = p.dim(1), m = p.spatial_size();
  if (alpha.size() != k) {
    throw std::invalid_argument(std::string(name) + ": " +
                                std::to_string(alpha.size()) +
                                " class weights for " + std::to_string(k) +
                                " classes");
  }
  const double voxels = static_cast<double>(n * m);
  const double gam = static_cast<double>(gamma);
  double total = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t c = 0; c < k; ++c) {
      const double a = alpha[c];
      const std::size_t base = (b * k + c) * m;
      for (std::size_t i = 0; i < m; ++i) {
        const double qi = q[base + i];
        if (qi == 0.0) continue;
        const double pc = std::max(static_cast<double>(p[base + i]),
                                   static_cast<double>(eps));
        const double one_minus = std::max(0.0, 1.0 - pc);
        const double mod = gam == 0.0 ? 1.0 : std::pow(one_minus, gam);
        total += -a * qi * mod * std::log(pc);
      }
    }
  }
  const double loss = total / voxels;

  return tape.record(
      name, Tensor::scalar(static_cast<Real>(loss)), {pv},
      [q, alpha = std::move(alpha), gam, eps, voxels](BackwardContext& ctx) {
        const Tensor& p = ctx.input(0);
        const double g = ctx.grad_output()[0] / voxels;
        const std::size_t n = p.dim(0), k = p.dim(1), m = p.spatial_size();
        Tensor gp(p.shape());
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t c = 0; c < k; ++c) {
            const double a = alpha[c];
            const std::size_t base = (b * k + c) * m;
            for (std::size_t i = 0; i < m; ++i) {
              const double qi = q[base + i];
              const double raw = p[base + i];
              if (qi == 0.0 || raw < static_cast<double>(eps)) continue;
              const double one_minus = std::max(0.0, 1.0 - raw);
              const double mod = gam == 0.0 ? 1.0 : std::pow(one_minus, gam);
              double dmod = 0.0;
              if (gam != 0.0 && one_minus > 0.0) {
                dmod = -gam * std::pow(one_minus, gam - 1.0);
              }
              // d/dp [-a q mod(p) log p]
              const double d = -a * qi * (dmod * std::log(raw) + mod / raw);
              gp[base + i] = static_cast<Real>(g * d);
            }
          }
        }
        ctx.accumulate(0, std::move(gp));
      });
}

}  // namespace

ClassWeights ClassWeights::uniform(int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("class count must be >= 1");
  return {std::vector<Real>(static_cast<std::size_t>(num_classes), Real{1})};
}

ClassWeights ClassWeights::inverse_frequency(const std::vector<std::size_t>& counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (counts.empty() || total <= 0.0) {
    throw std::invalid_argument("inverse-frequency weights need voxel counts");
  }
  std::vector<double> raw(counts.size(), 0.0);
  double largest = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] > 0) {
      raw[k] = total / (static_cast<double>(counts.size()) *
                        static_cast<double>(counts[k]));
      largest = std::max(largest, raw[k]);
    }
  }
  ClassWeights w;
  for (double r : raw) w.values.push_back(static_cast<Real>(r > 0.0 ? r : largest));
  return w;
}

Real ClassWeights::total() const {
  double s = 0.0;
  for (Real v : values) s += v;
  return static_cast<Real>(s);
}

ClassWeights ClassWeights::normalized() const {
  const double t = total();
  ClassWeights w = *this;
  for (Real& v : w.values) v = static_cast<Real>(v / t);
  return w;
}

void ClassWeights::validate(std::size_t num_classes) const {
  if (values.size() != num_classes) {
    throw std::invalid_argument("expected " + std::to_string(num_classes) +
                                " class weights, got " +
                                std::to_string(values.size()));
  }
  bool positive = false;
  for (Real v : values) {
    if (!std::isfinite(v) || v < Real{0}) {
      throw std::invalid_argument("class weights must be finite and >= 0");
    }
    positive = positive || v > Real{0};
  }
  if (!positive) throw std::invalid_argument("at least one class weight must be > 0");
}

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::dice: return "dice";
    case LossKind::dsl: return "dsl";
    case LossKind::focal: return "focal";
    case LossKind::dsf: return "dsf";
    case LossKind::weighted_ce: return "wce";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "dice" || name == "dsc") return LossKind::dice;
  if (name == "dsl") return LossKind::dsl;
  if (name == "focal" || name == "fl") return LossKind::focal;
  if (name == "dsf") return LossKind::dsf;
  if (name == "wce" || name == "ce") return LossKind::weighted_ce;
  throw std::invalid_argument("unknown loss '" + name + "'");
}

std::vector<Real> LossConfig::focal_alpha() const {
  if (!alpha.empty()) return alpha;
  return weights.normalized().values;
}

void LossConfig::validate(std::size_t num_classes) const {
  if (!(gamma >= Real{0})) throw std::invalid_argument("focal gamma must be >= 0");
  if (!(lambda_fl >= Real{0})) throw std::invalid_argument("lambda_fl must be >= 0");
  if (!(clamp_eps > Real{0})) throw std::invalid_argument("clamp_eps must be > 0");
  weights.validate(num_classes);
  if (!alpha.empty()) ClassWeights{alpha}.validate(num_classes);
}

Tensor one_hot(const LabelMap& labels, int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("one_hot: K must be >= 1");
  const auto& e = labels.extents();
  const std::size_t m = e.voxels();
  const auto k = static_cast<std::size_t>(num_classes);
  Tensor t({1, k, e.d, e.h, e.w});
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t cls = labels.grid.data[i];
    if (cls >= k) {
      throw std::invalid_argument("one_hot: label " + std::to_string(cls) +
                                  " outside [0, " + std::to_string(k) + ")");
    }
    t[cls * m + i] = Real{1};
  }
  return t;
}

Var dice_loss(Tape& tape, Var probs, const Tensor& truth,
              const ClassWeights& weights) {
  return dice_family(tape, probs, truth, weights, false, "dice_loss");
}

Var dsl(Tape& tape, Var probs, const Tensor& truth, const ClassWeights& weights) {
  return dice_family(tape, probs, truth, weights, true, "dsl");
}

Var focal_loss(Tape& tape, Var probs, const Tensor& truth,
               const LossConfig& config) {
  return focal_family(tape, probs, truth, config.focal_alpha(), config.gamma,
                      config.clamp_eps, "focal_loss");
}

Var dsf(Tape& tape, Var probs, const Tensor& truth, const LossConfig& config) {
  const Var d = dsl(tape, probs, truth, config.weights);
  const Var f = focal_loss(tape, probs, truth, config);
  return add(tape, d, scale(tape, f, config.lambda_fl));
}

Var weighted_ce(Tape& tape, Var probs, const Tensor& truth,
                const ClassWeights& weights, Real clamp_eps) {
  weights.validate(tape.value(probs).rank() >= 2 ? tape.value(probs).dim(1) : 0);
  return focal_family(tape, probs, truth, weights.values, Real{0}, clamp_eps,
                      "weighted_ce");
}

Var compute_loss(LossKind kind, Tape& tape, Var probs, const Tensor& truth,
                 const LossConfig& config) {
  switch (kind) {
    case LossKind::dice: return dice_loss(tape, probs, truth, config.weights);
    case LossKind::dsl: return dsl(tape, probs, truth, config.weights);
    case LossKind::focal: return focal_loss(tape, probs, truth, config);
    case LossKind::dsf: return dsf(tape, probs, truth, config);
    case LossKind::weighted_ce:
      return weighted_ce(tape, probs, truth, config.weights, config.clamp_eps);
  }
  throw std::invalid_argument("unknown loss kind");
}

std::uint64_t squared_difference_passes() {
  return g_psi_passes.load(std::memory_order_relaxed);
}

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
