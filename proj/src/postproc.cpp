#include "canvolve/postproc.hpp"

#include <array>
#include <deque>
#include <numeric>

namespace canvolve {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
  }
  std::uint32_t find(std::uint32_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // The earlier voxel stays the root.
    if (a < b) parent_[b] = a; else parent_[a] = b;
  }

 private:
  std::vector<std::uint32_t> parent_;
};

struct Offset {
  int z, y, x;
};

// Neighbours already visited in a z-y-x raster scan.
std::vector<Offset> backward_neighbours(Connectivity conn) {
  std::vector<Offset> out;
  for (int dz = -1; dz <= 0; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const bool before = dz < 0 || (dz == 0 && (dy < 0 || (dy == 0 && dx < 0)));
        if (!before) continue;
        const int manhattan = std::abs(dz) + std::abs(dy) + std::abs(dx);
        if (conn == Connectivity::six && manhattan != 1) continue;
        out.push_back({dz, dy, dx});
      }
    }
  }
  return out;
}

}  // namespace

LabeledComponents connected_components(const Mask& mask, Connectivity conn) {
  const auto& e = mask.extents;
  DisjointSets sets(e.voxels());
  const auto neigh = backward_neighbours(conn);
  for (std::size_t z = 0; z < e.d; ++z) {
    for (std::size_t y = 0; y < e.h; ++y) {
      for (std::size_t x = 0; x < e.w; ++x) {
        const auto i = e.index(z, y, x);
        if (!mask.data[i]) continue;
        for (const auto& o : neigh) {
          const long nz = static_cast<long>(z) + o.z;
          const long ny = static_cast<long>(y) + o.y;
          const long nx = static_cast<long>(x) + o.x;
          if (!e.contains(nz, ny, nx)) continue;
          const auto j = e.index(static_cast<std::size_t>(nz),
                                 static_cast<std::size_t>(ny),
                                 static_cast<std::size_t>(nx));
          if (mask.data[j]) {
            sets.unite(static_cast<std::uint32_t>(i),
                       static_cast<std::uint32_t>(j));
          }
        }
      }
    }
  }

  LabeledComponents out;
  out.ids = Grid<std::uint32_t>(e, mask.spacing, 0);
  std::vector<std::uint32_t> root_id(e.voxels(), 0);
  for (std::size_t i = 0; i < e.voxels(); ++i) {
    if (!mask.data[i]) continue;
    const auto root = sets.find(static_cast<std::uint32_t>(i));
    if (root_id[root] == 0) {
      out.sizes.push_back(0);
      root_id[root] = static_cast<std::uint32_t>(out.sizes.size());
    }
    out.ids.data[i] = root_id[root];
    ++out.sizes[root_id[root] - 1];
  }
  return out;
}

KeepLargestResult keep_largest(const Mask& mask, Connectivity conn) {
  const auto comps = connected_components(mask, conn);
  if (comps.count() == 0) return {mask, true};
  std::size_t best = 0;
  for (std::size_t c = 1; c < comps.count(); ++c) {
    if (comps.sizes[c] > comps.sizes[best]) best = c;
  }
  const auto keep = static_cast<std::uint32_t>(best + 1);
  Mask out = mask;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = comps.ids.data[i] == keep ? 1 : 0;
  }
  return {std::move(out), false};
}

Mask fill_holes(const Mask& mask) {
  const auto& e = mask.extents;
  std::vector<std::uint8_t> outside(e.voxels(), 0);
  std::deque<std::array<std::size_t, 3>> queue;
  auto seed = [&](std::size_t z, std::size_t y, std::size_t x) {
    const auto i = e.index(z, y, x);
    if (!mask.data[i] && !outside[i]) {
      outside[i] = 1;
      queue.push_back({z, y, x});
    }
  };
  for (std::size_t z = 0; z < e.d; ++z) {
    for (std::size_t y = 0; y < e.h; ++y) {
      for (std::size_t x = 0; x < e.w; ++x) {
        const bool border = z == 0 || y == 0 || x == 0 || z + 1 == e.d ||
                            y + 1 == e.h || x + 1 == e.w;
        if (border) seed(z, y, x);
      }
    }
  }
  constexpr std::array<Offset, 6> kFaces{{{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                          {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};
  while (!queue.empty()) {
    const auto [z, y, x] = queue.front();
    queue.pop_front();
    for (const auto& o : kFaces) {
      const long nz = static_cast<long>(z) + o.z;
      const long ny = static_cast<long>(y) + o.y;
      const long nx = static_cast<long>(x) + o.x;
      if (e.contains(nz, ny, nx)) {
        seed(static_cast<std::size_t>(nz), static_cast<std::size_t>(ny),
             static_cast<std::size_t>(nx));
      }
    }
  }
  Mask out = mask;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    if (!outside[i]) out.data[i] = 1;
  }
  return out;
}

namespace {

LabelMap postprocess_once(const LabelMap& pred) {
  LabelMap out{Grid<std::uint8_t>(pred.extents(), pred.spacing(), 0),
               pred.num_classes};
  for (int cls = 1; cls < pred.num_classes; ++cls) {
    const Mask m = class_mask(pred, cls);
    auto kept = keep_largest(m, Connectivity::twenty_six);
    if (kept.empty_input) continue;
    const Mask filled = fill_holes(kept.mask);
    for (std::size_t i = 0; i < filled.data.size(); ++i) {
      if (filled.data[i]) out.grid.data[i] = static_cast<std::uint8_t>(cls);
    }
  }
  return out;
}

}  // namespace

LabelMap postprocess_labels(const LabelMap& pred) {
  validate(pred);
  // A later class can split an earlier one, so iterate to a fixed point.
  constexpr int kMaxPasses = 16;
  LabelMap current = postprocess_once(pred);
  for (int pass = 1; pass < kMaxPasses; ++pass) {
    LabelMap next = postprocess_once(current);
    if (next.grid.data == current.grid.data) break;
    current = std::move(next);
  }
  return current;
}

}  // namespace canvolve
