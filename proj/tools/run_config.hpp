#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "canvolve/losses.hpp"
#include "canvolve/model.hpp"
#include "canvolve/trainer.hpp"

namespace canvolve::cli {

/// Bad config text or values. Carries "source:line: " when known.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// How the training loss weights are chosen.
enum class WeightMode { inverse_frequency, uniform, explicit_values };

/// Sectioned run configuration:
///
///   [model]  num_classes, base_channels, cam_channels, latent_channels,
///            downsample_stages, cam_dilations, lrelu_alpha, adain_epsilon
///   [loss]   kind, gamma, lambda_fl, weights, alpha, clamp_eps
///   [train]  epochs, seed, initial_lr, lr_power, val_fraction, validate,
///            augment, max_shift_voxels, max_rotation_degrees,
///            record_wall_clock, checkpoint_every, folds
///   [data]   train, test
///
/// Lines are `key: value`; `#` starts a comment. Every key except the data
/// paths has a default.
struct RunConfig {
  ModelConfig model;
  TrainOptions train;  // also holds the loss kind and settings
  WeightMode weight_mode = WeightMode::inverse_frequency;
  int checkpoint_every = 1;  // epochs between last.ckpt writes
  int folds = 1;             // > 1: cross-validation mode
  std::filesystem::path train_data;
  std::filesystem::path test_data;

  RunConfig();

  /// Throws ConfigError naming `source` and the line.
  static RunConfig parse(std::istream& in, const std::string& source = "config");
  static RunConfig load(const std::filesystem::path& path);

  /// Full effective config in the same syntax; parse(to_text()) reproduces it.
  std::string to_text() const;

  /// Cross-field checks (model invariants, loss settings against K).
  void validate() const;
};

}  // namespace canvolve::cli
