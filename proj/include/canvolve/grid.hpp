#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace canvolve {

/// Spatial extents in (D, H, W) order; W is the fastest-varying axis.
struct Extents {
  std::size_t d = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t voxels() const { return d * h * w; }
  std::size_t index(std::size_t z, std::size_t y, std::size_t x) const {
    return (z * h + y) * w + x;
  }
  bool contains(long z, long y, long x) const {
    return z >= 0 && y >= 0 && x >= 0 && static_cast<std::size_t>(z) < d &&
           static_cast<std::size_t>(y) < h && static_cast<std::size_t>(x) < w;
  }
  friend bool operator==(const Extents&, const Extents&) = default;
};

std::string to_string(const Extents& e);

/// Millimetres per voxel along (D, H, W).
using Spacing = std::array<float, 3>;

/// Dense scalar grid with physical voxel spacing.
template <typename T>
struct Grid {
  Extents extents;
  Spacing spacing{1.0f, 1.0f, 1.0f};
  std::vector<T> data;

  Grid() = default;
  Grid(Extents e, Spacing s, T fill = T{})
      : extents(e), spacing(s), data(e.voxels(), fill) {}

  std::size_t size() const { return data.size(); }
  T& at(std::size_t z, std::size_t y, std::size_t x) {
    return data[extents.index(z, y, x)];
  }
  const T& at(std::size_t z, std::size_t y, std::size_t x) const {
    return data[extents.index(z, y, x)];
  }
};

using Volume = Grid<float>;
using Mask = Grid<std::uint8_t>;

/// Integer class grid aligned to a Volume; values in [0, num_classes).
struct LabelMap {
  Grid<std::uint8_t> grid;
  int num_classes = 0;

  const Extents& extents() const { return grid.extents; }
  const Spacing& spacing() const { return grid.spacing; }
  std::size_t size() const { return grid.size(); }
};

/// Throws std::invalid_argument when any label lies outside [0, num_classes).
void validate(const LabelMap& labels);

/// Binary mask of voxels whose label equals `cls`.
Mask class_mask(const LabelMap& labels, int cls);

std::size_t count_foreground(const Mask& mask);

/// Thrown when two grids that must be aligned are not.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void require_same_grid(const Extents& a, const Extents& b, const char* what);

}  // namespace canvolve
