// canvolve: synthesize data, train, predict, evaluate, audit, post-process.
//
// Exit codes: 0 success, 1 usage, 2 I/O, 3 shape/config contract,
// 4 numeric failure.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "canvolve/checkpoint.hpp"
#include "canvolve/dataset.hpp"
#include "canvolve/phantom.hpp"
#include "canvolve/postproc.hpp"
#include "canvolve/trainer.hpp"
#include "canvolve/volio.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace canvolve;
using canvolve::cli::ConfigError;
using canvolve::cli::RunConfig;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kContract = 3, kNumeric = 4 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void log(const std::string& msg) { std::cerr << msg << '\n'; }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(FormatErrorCode::io, "cannot write " + path.string());
  return out;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw FormatError(FormatErrorCode::io, "cannot create directory " + dir.string());
  }
}

bool is_nifti(const fs::path& p) {
  return p.extension() == ".nii";
}

Volume read_any_volume(const fs::path& p) {
  return is_nifti(p) ? read_nifti1(p) : read_vol3d_volume(p);
}

LabelMap read_any_labels(const fs::path& p, int k) {
  return is_nifti(p) ? read_nifti1_labels(p, k) : read_vol3d_labels(p, k);
}

// "32" or "32x32x48".
Extents parse_size(const std::string& text) {
  std::vector<std::size_t> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, 'x')) {
    std::size_t pos = 0;
    unsigned long n = 0;
    try {
      n = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size() || n == 0) throw UsageError("bad --size '" + text + "'");
    v.push_back(n);
  }
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw UsageError("bad --size '" + text + "'");
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::uint64_t seed = 0;
  int count = 0;
  std::string size = "32";
  int classes = 3;
  fs::path out;
};

int cmd_synth(const SynthArgs& a) {
  const Extents e = parse_size(a.size);
  Dataset data;
  for (int i = 0; i < a.count; ++i) {
    auto p = synth_phantom(a.seed + static_cast<std::uint64_t>(i), e, {1.0f, 1.0f, 1.0f}, a.classes);
    char id[32];
    std::snprintf(id, sizeof id, "case%03d", i);
    data.push_back({id, std::move(p.volume), std::move(p.labels)});
  }
  write_dataset(data, a.out);
  log("wrote " + std::to_string(a.count) + " phantoms to " + a.out.string());
  return kOk;
}

// ---------------------------------------------------------------------------
// train

void write_validation_csv(const TrainState& state, std::ostream& out) {
  out << "# schema-version 1\n";
  out << "epoch,mean_dsc";
  const std::size_t n = state.validation.empty() ? 0 : state.validation.front().val_dsc.size();
  for (std::size_t c = 0; c < n; ++c) out << ",dsc_" << c + 1;
  out << '\n';
  out.precision(17);
  for (const auto& r : state.validation) {
    out << r.epoch << ',' << r.mean_dsc;
    for (double v : r.val_dsc) out << ',' << v;
    out << '\n';
  }
}

void write_report(const MetricsReport& report, const fs::path& path) {
  auto out = open_out(path);
  write_metrics_csv(report, out);
}

void print_summary(const MetricsReport& report) {
  for (const auto& s : report.summary()) {
    std::ostringstream o;
    o.precision(4);
    o << "class " << s.cls << ": DSC " << s.dsc.mean << " +- " << s.dsc.sd
      << ", MSD " << s.msd_mm.mean << " mm, HD " << s.hd_mm.mean << " mm";
    log(o.str());
  }
}

// Trains one run into `out` and returns the best-validation network.
// Stops early (with a resumable last.ckpt) once `until` epochs are done.
Network run_training(const RunConfig& cfg, const TrainOptions& options,
                     const Dataset& data, const fs::path& out,
                     const std::optional<fs::path>& resume, int until) {
  make_dir(out);
  std::optional<Trainer> trainer;
  if (resume) {
    auto ck = load_checkpoint(*resume, cfg.model);
    if (ck.state.seed != options.seed || ck.state.schedule.total_epochs != options.epochs) {
      throw ConfigError("checkpoint " + resume->string() +
                        " was written for a different seed or epoch count");
    }
    log("resuming at epoch " + std::to_string(ck.state.epoch));
    trainer.emplace(std::move(ck.network), std::move(ck.state), options, data, std::move(ck.best));
  } else {
    trainer.emplace(cfg.model, options, data);
  }
  log("training on " + std::to_string(trainer->split().train.size()) + " cases, validating on " +
      std::to_string(trainer->split().val.size()));

  const fs::path last = out / "last.ckpt";
  while (!trainer->finished() && trainer->state().epoch < until) {
    trainer->run_epoch();
    const auto& st = trainer->state();
    double sum = 0.0;
    std::size_t n = 0;
    for (auto it = st.history.rbegin(); it != st.history.rend() && it->epoch == st.epoch - 1; ++it) {
      sum += it->loss;
      ++n;
    }
    std::ostringstream msg;
    msg.precision(5);
    msg << "epoch " << st.epoch << '/' << options.epochs << " lr " << st.history.back().lr
        << " mean loss " << sum / static_cast<double>(n);
    if (!st.validation.empty() && st.validation.back().epoch == st.epoch - 1) {
      msg << " val DSC " << st.validation.back().mean_dsc;
    }
    log(msg.str());
    if (st.epoch % cfg.checkpoint_every == 0 || trainer->finished() || st.epoch == until) {
      save_checkpoint(last, trainer->network(), st, &trainer->best_network());
    }
  }

  const auto& st = trainer->state();
  save_checkpoint(out / "best.ckpt", trainer->best_network(), st);
  {
    auto f = open_out(out / "history.csv");
    write_history_csv(st, f);
  }
  {
    auto f = open_out(out / "validation.csv");
    write_validation_csv(st, f);
  }
  return trainer->best_network();
}

struct TrainArgs {
  fs::path config;
  fs::path data;
  fs::path out;
  fs::path resume;
  int until = 0;
};

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = RunConfig::load(a.config);
  if (!a.data.empty()) cfg.train_data = a.data;
  if (cfg.train_data.empty()) throw ConfigError("no training data: set [data] train or pass --data");

  make_dir(a.out);
  {
    auto f = open_out(a.out / "config.cfg");
    f << cfg.to_text();
  }
  const Dataset data = load_dataset(cfg.train_data, cfg.model.num_classes);
  TrainOptions options = cfg.train;
  if (cfg.weight_mode == cli::WeightMode::uniform) {
    options.loss_config.weights = ClassWeights::uniform(cfg.model.num_classes);
  }

  if (cfg.folds > 1) {
    if (!a.resume.empty() || a.until > 0) {
      throw UsageError("--resume and --until are not supported with folds > 1");
    }
    MetricsReport all;
    const auto folds = kfold_split(data.size(), cfg.folds, options.seed);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      log("fold " + std::to_string(f + 1) + "/" + std::to_string(folds.size()));
      Dataset train_part, held_out;
      for (std::size_t i = 0; i < data.size(); ++i) {
        const bool in_fold = std::binary_search(folds[f].begin(), folds[f].end(), i);
        (in_fold ? held_out : train_part).push_back(data[i]);
      }
      const fs::path dir = a.out / ("fold" + std::to_string(f + 1));
      const Network best = run_training(cfg, options, train_part, dir, std::nullopt, cfg.train.epochs);
      const MetricsReport rep = evaluate(best, held_out);
      write_report(rep, dir / "metrics.csv");
      all.cases.insert(all.cases.end(), rep.cases.begin(), rep.cases.end());
    }
    write_report(all, a.out / "cv_metrics.csv");
    print_summary(all);
    return kOk;
  }

  const Network best = run_training(cfg, options, data, a.out,
                                    a.resume.empty() ? std::nullopt : std::optional(a.resume),
                                    a.until > 0 ? a.until : cfg.train.epochs);
  if (!cfg.test_data.empty() && (a.until == 0 || a.until >= cfg.train.epochs)) {
    const Dataset test = load_dataset(cfg.test_data, cfg.model.num_classes);
    const MetricsReport rep = evaluate(best, test);
    write_report(rep, a.out / "test_metrics.csv");
    print_summary(rep);
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// predict / postprocess

struct PredictArgs {
  fs::path ckpt;
  fs::path in;
  fs::path out;
  bool postprocess = false;
  bool use_best = false;
};

int cmd_predict(const PredictArgs& a) {
  if (!fs::exists(a.ckpt)) {
    throw CheckpointError(CheckpointErrorCode::io, "no checkpoint at " + a.ckpt.string());
  }
  auto ck = load_checkpoint(a.ckpt);
  Network net = std::move(ck.network);
  if (a.use_best) {
    if (!ck.best) throw ConfigError("checkpoint " + a.ckpt.string() + " holds no separate best weights");
    net.set_parameters(std::move(*ck.best));
  }
  auto run = [&](const fs::path& in, const fs::path& out) {
    LabelMap pred = predict(net, read_any_volume(in));
    if (a.postprocess) pred = postprocess_labels(pred);
    write_vol3d(pred, out);
  };
  if (fs::is_directory(a.in)) {
    make_dir(a.out);
    std::vector<fs::path> inputs;
    for (const auto& entry : fs::directory_iterator(a.in)) {
      const std::string name = entry.path().filename().string();
      if (name.size() > 12 && name.ends_with("_image.vol3d")) inputs.push_back(entry.path());
    }
    std::sort(inputs.begin(), inputs.end());
    for (const auto& p : inputs) {
      const std::string name = p.filename().string();
      run(p, a.out / (name.substr(0, name.size() - 12) + "_pred.vol3d"));
    }
    log("predicted " + std::to_string(inputs.size()) + " volumes into " + a.out.string());
  } else {
    if (!fs::exists(a.in)) throw FormatError(FormatErrorCode::io, "no input at " + a.in.string());
    run(a.in, a.out);
  }
  return kOk;
}

struct PostprocessArgs {
  fs::path in;
  fs::path out;
  int classes = 0;
};

int cmd_postprocess(const PostprocessArgs& a) {
  write_vol3d(postprocess_labels(read_any_labels(a.in, a.classes)), a.out);
  return kOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  fs::path pred;
  fs::path truth;
  fs::path out;
  int classes = 0;
};

std::string case_id_of(const fs::path& p) {
  std::string stem = p.filename().string();
  for (const char* suffix : {"_labels.vol3d", "_pred.vol3d", ".vol3d", ".nii"}) {
    if (stem.ends_with(suffix)) return stem.substr(0, stem.size() - std::char_traits<char>::length(suffix));
  }
  return stem;
}

int cmd_evaluate(const EvaluateArgs& a) {
  std::vector<std::pair<fs::path, fs::path>> pairs;  // (pred, truth)
  if (fs::is_directory(a.truth)) {
    if (!fs::is_directory(a.pred)) throw UsageError("--pred must be a directory when --truth is");
    std::vector<fs::path> truths;
    for (const auto& entry : fs::directory_iterator(a.truth)) {
      if (entry.path().filename().string().ends_with("_labels.vol3d")) truths.push_back(entry.path());
    }
    std::sort(truths.begin(), truths.end());
    for (const auto& t : truths) {
      const std::string id = case_id_of(t);
      fs::path p = a.pred / (id + "_pred.vol3d");
      if (!fs::exists(p)) p = a.pred / (id + "_labels.vol3d");
      if (!fs::exists(p)) throw FormatError(FormatErrorCode::io, "no prediction for case " + id);
      pairs.emplace_back(p, t);
    }
    if (pairs.empty()) throw FormatError(FormatErrorCode::io, "no *_labels.vol3d in " + a.truth.string());
  } else {
    pairs.emplace_back(a.pred, a.truth);
  }

  MetricsReport report;
  for (const auto& [p, t] : pairs) {
    LabelMap pred = read_any_labels(p, a.classes);
    LabelMap truth = read_any_labels(t, a.classes);
    const int k = std::max(pred.num_classes, truth.num_classes);
    pred.num_classes = truth.num_classes = k;
    report.cases.push_back(evaluate_case(pred, truth, case_id_of(t)));
  }
  write_report(report, a.out);
  print_summary(report);
  return kOk;
}

// ---------------------------------------------------------------------------
// audit

int cmd_audit(const fs::path& config) {
  const ModelConfig model = config.empty() ? ModelConfig{} : RunConfig::load(config).model;
  const auto pc = count_parameters(model);
  const auto layers = model.ledger();
  std::cout << "# schema-version 1\n";
  std::cout << "layer,role,in,out,kernel,stride,dilation,conv_params,adain_params,total\n";
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const auto& c = pc.layers[i];
    std::cout << l.name << ',' << to_string(l.role) << ',' << l.conv.in_channels << ','
              << l.conv.out_channels << ',' << l.conv.kernel << ',' << l.conv.stride << ','
              << l.conv.dilation << ',' << c.conv << ',' << c.adain << ',' << c.total() << '\n';
  }
  char millions[32];
  std::snprintf(millions, sizeof millions, "%.3f", static_cast<double>(pc.total) / 1e6);
  std::cout << "total,,,,,,,,," << pc.total << '\n';
  std::cout << "# parameters (million): " << millions << "\n\n";
  std::cout << "layer,dilated_extent,stride,jump,receptive_field\n";
  for (const auto& s : receptive_field_table(model)) {
    std::cout << s.layer << ',' << s.dilated_extent << ',' << s.stride << ','
              << s.jump_before << ',' << s.field << '\n';
  }
  std::cout << "# receptive field at CAM output: " << receptive_field(model) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

void apply_thread_limit() {
  const char* env = std::getenv("CANVOLVE_THREADS");
  if (!env || !*env) return;
  std::size_t pos = 0;
  int n = 0;
  try {
    n = std::stoi(env, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || env[pos] != '\0' || n < 1) {
    throw UsageError(std::string("CANVOLVE_THREADS must be a positive integer, got '") + env + "'");
  }
#ifdef _OPENMP
  omp_set_num_threads(n);
#endif
}

int guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    log(std::string("canvolve: ") + e.what());
    return kUsage;
  } catch (const CheckpointError& e) {
    log(std::string("canvolve: checkpoint: ") + to_string(e.code()) + ": " + e.what());
    const bool contract = e.code() == CheckpointErrorCode::config_mismatch ||
                          e.code() == CheckpointErrorCode::precision_mismatch;
    return contract ? kContract : kIo;
  } catch (const FormatError& e) {
    log(std::string("canvolve: ") + e.what());
    return kIo;
  } catch (const fs::filesystem_error& e) {
    log(std::string("canvolve: ") + e.what());
    return kIo;
  } catch (const NumericError& e) {
    log(std::string("canvolve: numeric failure: ") + e.what());
    return kNumeric;
  } catch (const std::logic_error& e) {
    // ConfigError, ShapeError, GridMismatch and other contract violations.
    log(std::string("canvolve: ") + e.what());
    return kContract;
  } catch (const std::exception& e) {
    log(std::string("canvolve: ") + e.what());
    return kIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CAN3D volumetric segmentation: synthesize, train, predict, evaluate"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write synthetic phantom volumes and label maps");
  s->add_option("--seed", synth.seed, "Seed of the first phantom");
  s->add_option("--count", synth.count, "Number of phantoms")->required()->check(CLI::PositiveNumber);
  s->add_option("--size", synth.size, "Extent N or DxHxW")->capture_default_str();
  s->add_option("--classes", synth.classes, "Classes including background (3..8)")->capture_default_str();
  s->add_option("--out", synth.out, "Output directory")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a network from a run config");
  t->add_option("--config", train.config, "Run config file")->required();
  t->add_option("--data", train.data, "Training dataset directory (overrides [data] train)");
  t->add_option("--out", train.out, "Output directory")->required();
  t->add_option("--resume", train.resume, "Continue from a last.ckpt");
  t->add_option("--until", train.until, "Stop after this many completed epochs")->check(CLI::PositiveNumber);

  PredictArgs predict_args;
  auto* p = app.add_subcommand("predict", "Segment a volume or a directory of volumes");
  p->add_option("--ckpt", predict_args.ckpt, "Checkpoint file")->required();
  p->add_option("--in", predict_args.in, "Input volume (.vol3d/.nii) or directory")->required();
  p->add_option("--out", predict_args.out, "Output label map or directory")->required();
  p->add_flag("--postprocess", predict_args.postprocess, "Keep the largest component per class and fill holes");
  p->add_flag("--use-best", predict_args.use_best, "Use the best-validation weights stored in a last.ckpt");

  EvaluateArgs eval;
  auto* e = app.add_subcommand("evaluate", "Per-case DSC, MSD and HD against ground truth");
  e->add_option("--pred", eval.pred, "Predicted label map or directory")->required();
  e->add_option("--truth", eval.truth, "Ground-truth label map or dataset directory")->required();
  e->add_option("--out", eval.out, "Metrics CSV")->required();
  e->add_option("--classes", eval.classes, "Class count (default: inferred)");

  fs::path audit_config;
  auto* a = app.add_subcommand("audit", "Print the parameter ledger and receptive field");
  a->add_option("--config", audit_config, "Run config file (default: pelvis configuration)");

  PostprocessArgs post;
  auto* pp = app.add_subcommand("postprocess", "Post-process a label map");
  pp->add_option("--in", post.in, "Input label map")->required();
  pp->add_option("--out", post.out, "Output label map")->required();
  pp->add_option("--classes", post.classes, "Class count (default: inferred)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  }

  return guarded([&]() -> int {
    apply_thread_limit();
    if (s->parsed()) return cmd_synth(synth);
    if (t->parsed()) return cmd_train(train);
    if (p->parsed()) return cmd_predict(predict_args);
    if (e->parsed()) return cmd_evaluate(eval);
    if (a->parsed()) return cmd_audit(audit_config);
    return cmd_postprocess(post);
  });
}
