#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "canvolve/grid.hpp"
#include "canvolve/nn_ops.hpp"

namespace canvolve {
inline namespace CANVOLVE_PRECISION_NS {

enum class LayerRole { standard, cam, deconv, shortcut, seghead };

const char* to_string(LayerRole role);

struct LayerSpec {
  std::string name;
  LayerRole role = LayerRole::standard;
  ConvSpec conv;
  bool has_adain = true;
};

/// Raised when an input violates the network's shape contract.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelConfig {
  int num_classes = 6;                 // K, background included
  std::size_t base_channels = 8;       // ConvB1 output
  std::size_t cam_channels = 36;
  std::size_t latent_channels = 48;    // last CAM block output
  int downsample_stages = 1;           // 1 or 2
  std::vector<std::size_t> cam_dilations{2, 4, 8, 1};  // last entry: latent block
  double lrelu_alpha = 0.1;
  double adain_epsilon = 1e-5;

  /// Pelvis configuration: 8 base channels, six classes, one down-sampling.
  static ModelConfig pelvis() { return {}; }

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;

  /// Required divisor of every input extent.
  std::size_t spatial_divisor() const { return std::size_t{1} << downsample_stages; }

  /// Stable `key=value` text used for hashing and echoing.
  std::string canonical() const;
  /// Inverse of canonical(); throws std::invalid_argument on bad text.
  static ModelConfig from_canonical(const std::string& text);
  std::uint32_t hash() const;

  /// Ordered layer ledger; parameters follow this order.
  std::vector<LayerSpec> ledger() const;
};

struct Parameter {
  std::string name;
  Tensor value;
};

struct LayerParameterCount {
  std::string layer;
  std::size_t conv = 0;   // weights + biases
  std::size_t adain = 0;  // AdaIN scalars
  std::size_t total() const { return conv + adain; }
};

struct ParameterCount {
  std::size_t total = 0;
  std::vector<LayerParameterCount> layers;
};

struct ReceptiveFieldStep {
  std::string layer;
  std::size_t dilated_extent = 0;
  std::size_t stride = 1;
  std::size_t jump_before = 1;
  std::size_t field = 1;
};

/// rf <- rf + (u_hat - 1) * jump, jump <- jump * stride along the encoder
/// path up to the CAM output.
std::vector<ReceptiveFieldStep> receptive_field_table(const ModelConfig& config);
std::size_t receptive_field(const ModelConfig& config);

/// Values recorded by one forward pass.
struct ForwardResult {
  Var logits;                                   // 1 x K x D x H x W
  Var probs;                                    // softmax over channels
  std::vector<Var> params;                      // ledger order
  std::vector<std::pair<std::string, Var>> activations;  // named block outputs
};

/// 1 x 1 x D x H x W tensor from a volume.
Tensor to_input_tensor(const Volume& volume);

class Network {
 public:
  /// Identity-initialized CAM blocks (square ones), Glorot elsewhere, zero
  /// biases, AdaIN a=1 b=0. Deterministic for a fixed seed.
  static Network build(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter>& parameters() { return params_; }

  /// Records the whole graph on `tape`. Throws ShapeError when the input is
  /// not 1 x 1 x D x H x W with extents divisible by spatial_divisor().
  ForwardResult forward(Tape& tape, const Tensor& input) const;
  /// Same graph with caller-recorded parameter handles in ledger order.
  ForwardResult forward(Tape& tape, const Tensor& input,
                        const std::vector<Var>& params) const;

  /// Probabilities without keeping a tape around.
  Tensor predict_probs(const Tensor& input) const;

  ParameterCount count_parameters() const;

  /// Replaces parameters, checking names and shapes against the ledger.
  void set_parameters(std::vector<Parameter> params);

 private:
  ModelConfig config_;
  std::vector<LayerSpec> layers_;
  std::vector<Parameter> params_;
};

/// Parameter count implied by a config without instantiating tensors.
ParameterCount count_parameters(const ModelConfig& config);

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
