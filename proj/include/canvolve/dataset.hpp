#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "canvolve/grid.hpp"

namespace canvolve {

struct Sample {
  std::string id;
  Volume volume;
  LabelMap labels;
};

using Dataset = std::vector<Sample>;

inline constexpr const char* kManifestName = "manifest.csv";

/// CRC-32 of a file's bytes.
std::uint32_t file_crc32(const std::filesystem::path& path);

/// Writes `<id>_image.vol3d` and `<id>_labels.vol3d` for every sample plus a
/// manifest with their checksums.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);

/// Reads the manifest in `dir` (or, without one, every `*_image.vol3d` with a
/// matching `*_labels.vol3d`, sorted by id). Label maps get `num_classes`
/// classes, or an inferred count when 0. Throws FormatError on I/O problems
/// and GridMismatch when an image and its labels disagree.
Dataset load_dataset(const std::filesystem::path& dir, int num_classes = 0);

}  // namespace canvolve
