#pragma once

#include <array>
#include <cstdint>

#include "canvolve/grid.hpp"

namespace canvolve {

/// Maps each output voxel p to the source position
///   s = matrix * (p - c) + c - translation
/// where c is the grid centre. A positive translation moves content forward.
struct SpatialTransform {
  std::array<std::array<double, 3>, 3> matrix{
      {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
  std::array<double, 3> translation{0.0, 0.0, 0.0};

  static SpatialTransform identity() { return {}; }
  static SpatialTransform shift(double dz, double dy, double dx);
  /// Rotation of the content by `radians` about axis 0 (D), 1 (H) or 2 (W).
  static SpatialTransform rotation(int axis, double radians);
  /// Exact integer rotation by quarter turns.
  static SpatialTransform quarter_turns(int axis, int turns);
};

struct AugmentOps {
  bool shift = false;
  bool rotation = false;
  bool affine = false;
  bool elastic = false;  // off unless requested
};

struct AugmentRanges {
  double max_shift_voxels = 5.0;
  double max_rotation_degrees = 10.0;
  double max_scale = 0.10;
  double max_shear = 0.05;
  double elastic_magnitude_voxels = 2.0;
  int elastic_control_points = 5;
};

struct AugmentedCase {
  Volume volume;
  LabelMap labels;
};

/// Applies one transform to both grids: trilinear for intensities, nearest
/// neighbour for labels. Out-of-grid samples become 0 / background.
AugmentedCase apply_transform(const Volume& volume, const LabelMap& labels,
                              const SpatialTransform& transform);

/// Draws a random transform from `seed` composed of the selected operations
/// and applies it.
AugmentedCase augment(const Volume& volume, const LabelMap& labels,
                      std::uint64_t seed, const AugmentOps& ops,
                      const AugmentRanges& ranges = {});

}  // namespace canvolve
