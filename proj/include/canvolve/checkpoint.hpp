#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "canvolve/model.hpp"
#include "canvolve/trainer.hpp"

namespace canvolve {

enum class CheckpointErrorCode {
  io,
  bad_magic,
  bad_version,
  truncated,
  corrupt,
  config_mismatch,
  precision_mismatch,
};

inline const char* to_string(CheckpointErrorCode code) {
  switch (code) {
    case CheckpointErrorCode::io: return "io";
    case CheckpointErrorCode::bad_magic: return "bad_magic";
    case CheckpointErrorCode::bad_version: return "bad_version";
    case CheckpointErrorCode::truncated: return "truncated";
    case CheckpointErrorCode::corrupt: return "corrupt";
    case CheckpointErrorCode::config_mismatch: return "config_mismatch";
    case CheckpointErrorCode::precision_mismatch: return "precision_mismatch";
  }
  return "unknown";
}

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(CheckpointErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  CheckpointErrorCode code() const { return code_; }

 private:
  CheckpointErrorCode code_;
};

inline constexpr char kCheckpointMagic[9] = {'C', 'A', 'N', '3', 'D', 'C', 'K', 'P', 'T'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

inline namespace CANVOLVE_PRECISION_NS {

struct Checkpoint {
  Network network;
  TrainState state;
  std::optional<std::vector<Parameter>> best;  // best-validation weights
};

void save_checkpoint(const std::filesystem::path& path, const Network& net,
                     const TrainState& state, const Network* best = nullptr);

/// Rebuilds the network from the stored configuration.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Same, but refuses a file whose configuration hash differs from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const ModelConfig& expected);

}  // namespace CANVOLVE_PRECISION_NS
}  // namespace canvolve
