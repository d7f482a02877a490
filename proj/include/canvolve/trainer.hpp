#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "canvolve/augment.hpp"
#include "canvolve/dataset.hpp"
#include "canvolve/losses.hpp"
#include "canvolve/metrics.hpp"
#include "canvolve/model.hpp"
#include "canvolve/optim.hpp"

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

struct StepRecord {
  std::uint64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double wall_ms = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  std::vector<double> val_dsc;  // foreground classes 1..K-1
  double mean_dsc = 0.0;
};

/// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  AdamState adam;
  Schedule schedule;
  int epoch = 0;            // completed epochs
  std::uint64_t step = 0;   // completed steps
  std::uint64_t seed = 0;
  std::vector<StepRecord> history;
  std::vector<EpochRecord> validation;
  double best_score = -1.0;
  int best_epoch = -1;
};

struct TrainOptions {
  int epochs = 30;
  std::uint64_t seed = 0;
  double initial_lr = 1e-3;
  double lr_power = 2.0;
  double val_fraction = 0.2;
  LossKind loss = LossKind::dsf;
  LossConfig loss_config;   // empty weights: inverse frequency of the train split
  bool validate_each_epoch = true;
  // Per-step augmentation of the training case, seeded by (seed, step).
  AugmentOps augment_ops;
  AugmentRanges augment_ranges;
  // Off: wall_ms is recorded as 0 so history files are byte-reproducible.
  bool record_wall_clock = true;

  bool augments() const {
    return augment_ops.shift || augment_ops.rotation || augment_ops.affine ||
           augment_ops.elastic;
  }
};

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Seeded shuffle of case indices; the last `val_fraction` become validation.
DataSplit split_dataset(std::size_t n, std::uint64_t seed, double val_fraction);

/// Seeded assignment of case indices to `folds` disjoint, near-equal folds.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int folds,
                                                  std::uint64_t seed);

/// Order in which an epoch visits the training cases.
std::vector<std::size_t> epoch_order(const std::vector<std::size_t>& train,
                                     std::uint64_t seed, int epoch);

/// Voxel count per class over the given cases.
std::vector<std::size_t> class_voxel_counts(const Dataset& data,
                                            const std::vector<std::size_t>& cases,
                                            int num_classes);

/// Channel argmax; ties resolve to the lower class index.
LabelMap argmax_labels(const Tensor& probs, const Spacing& spacing);

/// Z-scores the volume, runs the network and decodes labels.
LabelMap predict(const Network& net, const Volume& volume);

/// Per-case metrics of `net` on the selected cases (all when empty).
MetricsReport evaluate(const Network& net, const Dataset& data,
                       const std::vector<std::size_t>& cases = {});

/// Batch-size-1 training loop with Adam and per-epoch polynomial decay.
class Trainer {
 public:
  Trainer(const ModelConfig& config, TrainOptions options, const Dataset& data);
  /// Continues from a checkpointed network, state and best weights.
  Trainer(Network network, TrainState state, TrainOptions options,
          const Dataset& data,
          std::optional<std::vector<Parameter>> best = std::nullopt);

  /// Runs one epoch; throws std::logic_error when all epochs are done.
  void run_epoch();
  /// Runs epochs until `epoch` have completed (or all of them).
  void run_until(int epoch);
  void run() { run_until(options_.epochs); }
  bool finished() const { return state_.epoch >= options_.epochs; }

  const Network& network() const { return net_; }
  const Network& best_network() const { return best_; }
  const TrainState& state() const { return state_; }
  const DataSplit& split() const { return split_; }
  const LossConfig& loss_config() const { return loss_config_; }
  const TrainOptions& options() const { return options_; }

 private:
  void prepare();
  double train_step(std::size_t case_index, double lr);
  EpochRecord validate(int epoch) const;

  TrainOptions options_;
  const Dataset* data_;
  Network net_;
  Network best_;
  TrainState state_;
  DataSplit split_;
  LossConfig loss_config_;
  std::vector<Tensor> inputs_;   // z-scored volumes
  std::vector<Tensor> targets_;  // one-hot labels
};

struct TrainResult {
  Network network;
  Network best;
  TrainState state;
};

TrainResult train(const ModelConfig& config, const TrainOptions& options,
                  const Dataset& data);

/// CSV history: step, epoch, lr, loss, wall_ms.
void write_history_csv(const TrainState& state, std::ostream& out);

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
