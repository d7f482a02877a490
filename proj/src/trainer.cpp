#include "canvolve/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "canvolve/volio.hpp"

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

DataSplit split_dataset(std::size_t n, std::uint64_t seed, double val_fraction) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("val_fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(mix(seed));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto nval = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n)));
  DataSplit s;
  s.train.assign(idx.begin(), idx.end() - static_cast<long>(nval));
  s.val.assign(idx.end() - static_cast<long>(nval), idx.end());
  return s;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int folds,
                                                  std::uint64_t seed) {
  if (folds < 2 || static_cast<std::size_t>(folds) > n) {
    throw std::invalid_argument("fold count must lie in [2, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(mix(seed ^ 0xF01DULL));
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < n; ++i) out[i % out.size()].push_back(idx[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

std::vector<std::size_t> epoch_order(const std::vector<std::size_t>& train,
                                     std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order = train;
  std::mt19937_64 rng(mix(seed ^ mix(static_cast<std::uint64_t>(epoch) + 1)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::vector<std::size_t> class_voxel_counts(const Dataset& data,
                                            const std::vector<std::size_t>& cases,
                                            int num_classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (auto c : cases) {
    for (auto v : data.at(c).labels.grid.data) {
      if (v < counts.size()) ++counts[v];
    }
  }
  return counts;
}

LabelMap argmax_labels(const Tensor& probs, const Spacing& spacing) {
  if (probs.rank() != 5 || probs.dim(0) != 1) {
    throw ShapeError("argmax_labels expects 1 x K x D x H x W, got " +
                     to_string(probs.shape()));
  }
  const std::size_t k = probs.dim(1), m = probs.spatial_size();
  LabelMap out{Grid<std::uint8_t>({probs.dim(2), probs.dim(3), probs.dim(4)},
                                  spacing, 0),
               static_cast<int>(k)};
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (probs[c * m + i] > probs[best * m + i]) best = c;
    }
    out.grid.data[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

LabelMap predict(const Network& net, const Volume& volume) {
  const Tensor probs = net.predict_probs(to_input_tensor(normalize_zscore(volume)));
  return argmax_labels(probs, volume.spacing);
}

MetricsReport evaluate(const Network& net, const Dataset& data,
                       const std::vector<std::size_t>& cases) {
  std::vector<std::size_t> which = cases;
  if (which.empty()) {
    which.resize(data.size());
    std::iota(which.begin(), which.end(), std::size_t{0});
  }
  MetricsReport report;
  for (auto c : which) {
    const auto& s = data.at(c);
    report.cases.push_back(evaluate_case(predict(net, s.volume), s.labels, s.id));
  }
  return report;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(const ModelConfig& config, TrainOptions options, const Dataset& data)
    : options_(std::move(options)),
      data_(&data),
      net_(Network::build(config, options_.seed)),
      best_(net_) {
  state_.seed = options_.seed;
  state_.schedule = {options_.initial_lr, options_.epochs, options_.lr_power};
  prepare();
}

Trainer::Trainer(Network network, TrainState state, TrainOptions options,
                 const Dataset& data, std::optional<std::vector<Parameter>> best)
    : options_(std::move(options)),
      data_(&data),
      net_(std::move(network)),
      best_(net_),
      state_(std::move(state)) {
  options_.seed = state_.seed;
  options_.epochs = state_.schedule.total_epochs;
  options_.initial_lr = state_.schedule.initial_lr;
  options_.lr_power = state_.schedule.power;
  if (best) best_.set_parameters(std::move(*best));
  prepare();
}

void Trainer::prepare() {
  const auto& data = *data_;
  if (data.empty()) throw std::invalid_argument("training dataset is empty");
  if (options_.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  const auto& cfg = net_.config();
  const std::size_t div = cfg.spatial_divisor();
  for (const auto& s : data) {
    const auto& e = s.volume.extents;
    if (e.d % div || e.h % div || e.w % div) {
      throw ShapeError("case '" + s.id + "' extents " + to_string(e) +
                       " not divisible by " + std::to_string(div));
    }
    require_same_grid(e, s.labels.grid.extents, ("case " + s.id).c_str());
  }
  split_ = split_dataset(data.size(), state_.seed, options_.val_fraction);
  if (split_.train.empty()) throw std::invalid_argument("no training cases after split");

  loss_config_ = options_.loss_config;
  if (loss_config_.weights.values.empty()) {
    loss_config_.weights = ClassWeights::inverse_frequency(
        class_voxel_counts(data, split_.train, cfg.num_classes));
  }
  loss_config_.validate(static_cast<std::size_t>(cfg.num_classes));

  inputs_.clear();
  targets_.clear();
  for (const auto& s : data) {
    inputs_.push_back(to_input_tensor(normalize_zscore(s.volume)));
    targets_.push_back(one_hot(s.labels, cfg.num_classes));
  }
}

double Trainer::train_step(std::size_t case_index, double lr) {
  Tape tape;
  const Tensor* input = &inputs_[case_index];
  const Tensor* target = &targets_[case_index];
  Tensor aug_input, aug_target;
  if (options_.augments()) {
    // Keyed on the global step so a resumed run draws the same transforms.
    const auto& s = (*data_)[case_index];
    const auto a = augment(s.volume, s.labels, mix(state_.seed ^ mix(~state_.step)),
                           options_.augment_ops, options_.augment_ranges);
    aug_input = to_input_tensor(normalize_zscore(a.volume));
    aug_target = one_hot(a.labels, net_.config().num_classes);
    input = &aug_input;
    target = &aug_target;
  }
  const auto fr = net_.forward(tape, *input);
  const Var loss = compute_loss(options_.loss, tape, fr.probs, *target, loss_config_);
  const double value = tape.value(loss)[0];
  if (!std::isfinite(value)) {
    throw NumericError("loss is not finite on case '" + (*data_)[case_index].id + "'");
  }
  tape.backward(loss);
  std::vector<Tensor> grads;
  grads.reserve(fr.params.size());
  for (const Var& p : fr.params) grads.push_back(tape.grad(p));
  adam_step(net_.parameters(), grads, state_.adam, lr);
  return value;
}

EpochRecord Trainer::validate(int epoch) const {
  EpochRecord rec;
  rec.epoch = epoch;
  const int k = net_.config().num_classes;
  rec.val_dsc.assign(static_cast<std::size_t>(k - 1), 0.0);
  for (auto c : split_.val) {
    const auto& s = (*data_)[c];
    const LabelMap pred = argmax_labels(net_.predict_probs(inputs_[c]), s.volume.spacing);
    for (int cls = 1; cls < k; ++cls) {
      rec.val_dsc[static_cast<std::size_t>(cls - 1)] +=
          dice_score(class_mask(pred, cls), class_mask(s.labels, cls));
    }
  }
  double total = 0.0;
  for (auto& v : rec.val_dsc) {
    v /= static_cast<double>(split_.val.size());
    total += v;
  }
  rec.mean_dsc = total / static_cast<double>(rec.val_dsc.size());
  return rec;
}

void Trainer::run_epoch() {
  if (finished()) throw std::logic_error("all epochs already completed");
  const int epoch = state_.epoch;
  const double lr = poly_decay_lr(epoch, state_.schedule);
  for (auto c : epoch_order(split_.train, state_.seed, epoch)) {
    const auto t0 = std::chrono::steady_clock::now();
    const double loss = train_step(c, lr);
    const auto t1 = std::chrono::steady_clock::now();
    state_.step += 1;
    const double ms = options_.record_wall_clock
                          ? std::chrono::duration<double, std::milli>(t1 - t0).count()
                          : 0.0;
    state_.history.push_back({state_.step, epoch, lr, loss, ms});
  }
  state_.epoch += 1;
  if (options_.validate_each_epoch && !split_.val.empty()) {
    auto rec = validate(epoch);
    if (rec.mean_dsc > state_.best_score) {
      state_.best_score = rec.mean_dsc;
      state_.best_epoch = epoch;
      best_ = net_;
    }
    state_.validation.push_back(std::move(rec));
  } else {
    best_ = net_;
  }
}

void Trainer::run_until(int epoch) {
  while (!finished() && state_.epoch < epoch) run_epoch();
}

TrainResult train(const ModelConfig& config, const TrainOptions& options,
                  const Dataset& data) {
  Trainer t(config, options, data);
  t.run();
  return {t.network(), t.best_network(), t.state()};
}

void write_history_csv(const TrainState& state, std::ostream& out) {
  out << "# schema-version 1\n";
  out << "step,epoch,lr,loss,wall_ms\n";
  const auto prec = out.precision(17);
  for (const auto& r : state.history) {
    out << r.step << ',' << r.epoch << ',' << r.lr << ',' << r.loss << ','
        << r.wall_ms << '\n';
  }
  out.precision(prec);
}

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
