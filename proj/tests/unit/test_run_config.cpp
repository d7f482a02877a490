#include "doctest.h"

#include <sstream>

#include "canvolve/volio.hpp"
#include "run_config.hpp"

using namespace canvolve;
using canvolve::cli::ConfigError;
using canvolve::cli::RunConfig;
using canvolve::cli::WeightMode;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return RunConfig::parse(in, "test.cfg");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("empty config gives defaults") {
  const RunConfig c = parse("");
  CHECK(c.model.canonical() == ModelConfig{}.canonical());
  CHECK(c.train.epochs == 30);
  CHECK(c.train.initial_lr == 1e-3);
  CHECK(c.train.lr_power == 2.0);
  CHECK(c.train.loss == LossKind::dsf);
  CHECK(c.train.loss_config.lambda_fl == Real(10));
  CHECK(c.train.loss_config.gamma == Real(2));
  CHECK(c.weight_mode == WeightMode::inverse_frequency);
  CHECK(c.train_data.empty());
  CHECK(c.folds == 1);
}

TEST_CASE("sections, comments and values") {
  const RunConfig c = parse(
      "# header comment\n"
      "[model]\n"
      "num_classes: 3   # trailing comment\n"
      "cam_dilations: 1, 1, 1, 1\n"
      "\n"
      "[loss]\n"
      "kind: ce\n"
      "weights: 1, 2, 3.5\n"
      "alpha: 0.2, 0.3, 0.5\n"
      "[train]\n"
      "epochs: 7\n"
      "seed: 18446744073709551615\n"
      "validate: no\n"
      "augment: shift, rotation\n"
      "[data]\n"
      "train: some/dir\n");
  CHECK(c.model.num_classes == 3);
  CHECK(c.model.cam_dilations == std::vector<std::size_t>{1, 1, 1, 1});
  CHECK(c.train.loss == LossKind::weighted_ce);
  CHECK(c.weight_mode == WeightMode::explicit_values);
  CHECK(c.train.loss_config.weights.values == std::vector<Real>{1, 2, Real(3.5)});
  CHECK(c.train.loss_config.alpha.size() == 3);
  CHECK(c.train.epochs == 7);
  CHECK(c.train.seed == 18446744073709551615ULL);
  CHECK_FALSE(c.train.validate_each_epoch);
  CHECK(c.train.augment_ops.shift);
  CHECK(c.train.augment_ops.rotation);
  CHECK_FALSE(c.train.augment_ops.elastic);
  CHECK(c.train_data == "some/dir");
}

TEST_CASE("effective config text reads back identically") {
  const RunConfig c = parse(
      "[model]\nnum_classes: 4\nlrelu_alpha: 0.15\n"
      "[loss]\nweights: 0.1, 0.2, 0.3, 0.4\nclamp_eps: 1e-6\n"
      "[train]\ninitial_lr: 0.0007\nval_fraction: 0.25\naugment: affine\n"
      "[data]\ntrain: a\ntest: b\n");
  const std::string text = c.to_text();
  const RunConfig back = parse(text);
  CHECK(back.to_text() == text);
  CHECK(back.model.hash() == c.model.hash());
  CHECK(back.train.loss_config.weights.values == c.train.loss_config.weights.values);
  CHECK(back.train.initial_lr == c.train.initial_lr);
  CHECK(back.train.loss_config.clamp_eps == c.train.loss_config.clamp_eps);
  CHECK(back.test_data == "b");
}

TEST_CASE("unknown keys and malformed lines are errors with a location") {
  CHECK(error_of("[model]\nbogus: 1\n").find("test.cfg:2: unknown key 'bogus'") == 0);
  CHECK(error_of("[nonsense]\n").find("unknown section") != std::string::npos);
  CHECK(error_of("epochs: 3\n").find("outside of any section") != std::string::npos);
  CHECK(error_of("[train]\nepochs 3\n").find("expected 'key: value'") != std::string::npos);
  CHECK(error_of("[train]\nepochs: 3\nepochs: 4\n").find("duplicate key") != std::string::npos);
  CHECK(error_of("[train]\nepochs:\n").find("missing value") != std::string::npos);
  CHECK(error_of("[train]\nepochs: three\n").find("not a valid number") != std::string::npos);
  CHECK(error_of("[train]\nepochs: 3.5\n").find("not a valid number") != std::string::npos);
  CHECK(error_of("[train]\nvalidate: maybe\n").find("not a boolean") != std::string::npos);
  CHECK(error_of("[train]\naugment: twirl\n").find("unknown augmentation") != std::string::npos);
  CHECK(error_of("[loss]\nkind: hinge\n").find("unknown loss") != std::string::npos);
  CHECK(error_of("[model\n").find("malformed section") != std::string::npos);
}

TEST_CASE("cross-field validation") {
  CHECK_FALSE(error_of("[train]\nepochs: 0\n").empty());
  CHECK_FALSE(error_of("[train]\nval_fraction: 1\n").empty());
  CHECK_FALSE(error_of("[train]\ninitial_lr: 0\n").empty());
  CHECK_FALSE(error_of("[model]\nnum_classes: 1\n").empty());
  // Three weights for the default six classes.
  CHECK_FALSE(error_of("[loss]\nweights: 1, 2, 3\n").empty());
  CHECK_FALSE(error_of("[loss]\nweights: 0, 0, 0, 0, 0, 0\n").empty());
  CHECK_FALSE(error_of("[train]\nfolds: 0\n").empty());
  CHECK(error_of("[model]\nnum_classes: 3\n[loss]\nweights: 1, 1, 1\n").empty());
}

TEST_CASE("missing config file is an I/O error") {
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/dir/run.cfg"), FormatError);
}
