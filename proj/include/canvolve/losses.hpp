#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "canvolve/grid.hpp"
#include "canvolve/tape.hpp"

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

/// Non-negative per-class weights w_k; at least one positive.
struct ClassWeights {
  std::vector<Real> values;

  static ClassWeights uniform(int num_classes);
  /// w_k proportional to 1 / frequency_k from voxel counts; absent classes
  /// get the largest observed weight.
  static ClassWeights inverse_frequency(const std::vector<std::size_t>& counts);

  std::size_t size() const { return values.size(); }
  Real total() const;
  /// Copy scaled to sum to 1.
  ClassWeights normalized() const;
  void validate(std::size_t num_classes) const;
};

enum class LossKind { dice, dsl, focal, dsf, weighted_ce };

const char* to_string(LossKind kind);
/// Accepts "dice", "dsl", "focal", "dsf", "wce"/"ce".
LossKind parse_loss_kind(const std::string& name);

struct LossConfig {
  Real gamma = Real(2);          // focal exponent
  std::vector<Real> alpha;       // focal class weights; empty = weights.normalized()
  Real lambda_fl = Real(10);     // focal multiplier inside DSF
  ClassWeights weights;          // DSL / Dice / CE class weights
  Real clamp_eps = Real(1e-7);   // probability floor before log

  /// Effective focal weights.
  std::vector<Real> focal_alpha() const;
  void validate(std::size_t num_classes) const;
};

/// 1 x K x D x H x W one-hot encoding; throws on out-of-range labels.
Tensor one_hot(const LabelMap& labels, int num_classes);

/// Weighted mean over classes of sum (P-Q)^2 / (sum P^2 + sum Q^2). A class
/// with an all-zero denominator contributes 0.
Var dice_loss(Tape& tape, Var probs, const Tensor& truth,
              const ClassWeights& weights);

/// Dice-square loss: per class (Psi / (sum P^2 + sum Q^2) + Psi / I) with a
/// single squared-difference pass Psi, weight-averaged over classes.
Var dsl(Tape& tape, Var probs, const Tensor& truth, const ClassWeights& weights);

/// Mean over voxels of sum_k -alpha_k Q_k (1 - p_k)^gamma log(max(p_k, eps)).
Var focal_loss(Tape& tape, Var probs, const Tensor& truth,
               const LossConfig& config);

/// dsl + lambda_fl * focal_loss.
Var dsf(Tape& tape, Var probs, const Tensor& truth, const LossConfig& config);

/// Mean over voxels of sum_k -w_k Q_k log(max(p_k, eps)).
Var weighted_ce(Tape& tape, Var probs, const Tensor& truth,
                const ClassWeights& weights, Real clamp_eps = Real(1e-7));

Var compute_loss(LossKind kind, Tape& tape, Var probs, const Tensor& truth,
                 const LossConfig& config);

/// Number of per-class squared-difference reductions executed so far by
/// dice_loss and dsl (process-wide instrumentation counter).
std::uint64_t squared_difference_passes();

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
