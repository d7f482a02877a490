#pragma once

#include <cstdint>
#include <vector>

#include "canvolve/grid.hpp"

namespace canvolve {

enum class Connectivity { six = 6, twenty_six = 26 };

/// Component ids are dense 1..n in order of each component's first voxel in
/// scan order; 0 is background.
struct LabeledComponents {
  Grid<std::uint32_t> ids;
  std::vector<std::size_t> sizes;  // sizes[id - 1]

  std::size_t count() const { return sizes.size(); }
};

LabeledComponents connected_components(const Mask& mask, Connectivity conn);

struct KeepLargestResult {
  Mask mask;
  bool empty_input = false;  // the input had no foreground; returned as is
};

/// Retains the largest component; ties go to the lowest component id.
KeepLargestResult keep_largest(const Mask& mask,
                               Connectivity conn = Connectivity::twenty_six);

/// Background regions (6-connected) not reachable from the grid border become
/// foreground.
Mask fill_holes(const Mask& mask);

/// Per foreground class in ascending order: largest 26-connected component,
/// then hole filling. Later classes win overlaps. Repeated until stable.
LabelMap postprocess_labels(const LabelMap& pred);

}  // namespace canvolve
