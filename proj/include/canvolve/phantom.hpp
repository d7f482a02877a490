#pragma once

#include <cstdint>

#include "canvolve/grid.hpp"

namespace canvolve {

struct Phantom {
  Volume volume;
  LabelMap labels;
};

/// Smallest extent per axis accepted by synth_phantom.
inline constexpr std::size_t kMinPhantomExtent = 16;

/// Deterministic synthetic MR-like case.
///
/// Class 1 is a large "body" ellipsoid and class K-1 a small sphere inside it
/// holding under 1% of the voxels. A medium ellipsoid inside the body gets
/// class 2 when K >= 4 and otherwise carries the body label with its own
/// intensity; classes 3..K-2 add further medium blobs. Intensities are drawn
/// from overlapping per-structure Gaussians and multiplied by a smooth bias
/// field. Labels are the exact voxel-centre membership of the geometry.
///
/// Throws std::invalid_argument when K < 3, K > 8 or any extent < 16.
Phantom synth_phantom(std::uint64_t seed, Extents extents, Spacing spacing,
                      int num_classes);

}  // namespace canvolve
