#include "canvolve/grid.hpp"

#include <algorithm>

namespace canvolve {

std::string to_string(const Extents& e) {
  return std::to_string(e.d) + "x" + std::to_string(e.h) + "x" +
         std::to_string(e.w);
}

void validate(const LabelMap& labels) {
  if (labels.num_classes < 1 || labels.num_classes > 256) {
    throw std::invalid_argument("label map class count out of range: " +
                                std::to_string(labels.num_classes));
  }
  if (labels.grid.data.size() != labels.grid.extents.voxels()) {
    throw std::invalid_argument("label map payload does not match extents");
  }
  for (auto v : labels.grid.data) {
    if (static_cast<int>(v) >= labels.num_classes) {
      throw std::invalid_argument("label " + std::to_string(v) +
                                  " outside [0, " +
                                  std::to_string(labels.num_classes) + ")");
    }
  }
}

Mask class_mask(const LabelMap& labels, int cls) {
  Mask m(labels.extents(), labels.spacing(), 0);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    m.data[i] = labels.grid.data[i] == cls ? 1 : 0;
  }
  return m;
}

std::size_t count_foreground(const Mask& mask) {
  return static_cast<std::size_t>(std::count_if(
      mask.data.begin(), mask.data.end(), [](auto v) { return v != 0; }));
}

void require_same_grid(const Extents& a, const Extents& b, const char* what) {
  if (!(a == b)) {
    throw GridMismatch(std::string(what) + ": grid mismatch " + to_string(a) +
                       " vs " + to_string(b));
  }
}

}  // namespace canvolve
