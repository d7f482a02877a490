#include "canvolve/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace canvolve {

namespace {

struct Ellipsoid {
  std::array<double, 3> centre;
  std::array<double, 3> radii;

  bool contains(double z, double y, double x) const {
    const double a = (z - centre[0]) / radii[0];
    const double b = (y - centre[1]) / radii[1];
    const double c = (x - centre[2]) / radii[2];
    return a * a + b * b + c * c <= 1.0;
  }
};

struct Structure {
  Ellipsoid shape;
  int label;
  double mean;
};

constexpr double kNoiseSigma = 0.2;
constexpr double kBackgroundMean = 0.0;
constexpr double kBodyMean = 1.0;
constexpr double kSmallBlobMean = 2.2;
constexpr double kBiasAmplitude = 0.15;

}  // namespace

Phantom synth_phantom(std::uint64_t seed, Extents extents, Spacing spacing,
                      int num_classes) {
  if (num_classes < 3 || num_classes > 8) {
    throw std::invalid_argument("phantom class count must be in [3, 8]");
  }
  if (extents.d < kMinPhantomExtent || extents.h < kMinPhantomExtent ||
      extents.w < kMinPhantomExtent) {
    throw std::invalid_argument(
        "phantom extents " + to_string(extents) +
        " too small to contain body, medium and small structures (min 16)");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const std::array<double, 3> ext{static_cast<double>(extents.d),
                                  static_cast<double>(extents.h),
                                  static_cast<double>(extents.w)};
  std::array<double, 3> mid;
  for (int a = 0; a < 3; ++a) mid[a] = 0.5 * (ext[a] - 1.0);

  Ellipsoid body;
  for (int a = 0; a < 3; ++a) {
    body.centre[a] = mid[a] + uniform(-0.04, 0.04) * ext[a];
    body.radii[a] = uniform(0.30, 0.38) * ext[a];
  }

  struct Blob {
    std::array<double, 3> radii;
    int label;
    double mean;
  };
  std::vector<Blob> blobs;
  const int medium_count = std::max(1, num_classes - 3);
  const double min_ext = *std::min_element(ext.begin(), ext.end());
  for (int j = 0; j < medium_count; ++j) {
    std::array<double, 3> radii;
    const double scale = medium_count == 1 ? 0.12 : 0.09;
    for (int a = 0; a < 3; ++a) radii[a] = uniform(0.8, 1.0) * scale * ext[a];
    const int label = num_classes >= 4 ? 2 + j : 1;
    blobs.push_back({radii, label, 1.5 + 0.25 * j});
  }
  // Sphere volume capped at 0.5% of the grid keeps the class under 1%.
  const double total = static_cast<double>(extents.voxels());
  const double cap = std::cbrt(0.005 * total * 3.0 / (4.0 * std::numbers::pi));
  const double r_small = std::min(uniform(0.9, 1.0) * cap, 0.12 * min_ext);
  blobs.push_back({{r_small, r_small, r_small}, num_classes - 1, kSmallBlobMean});

  // Centres are drawn inside the body shrunk by each blob's largest radius
  // plus a margin, and blobs keep that margin of clearance between them. A layout
  // that cannot be completed is discarded and drawn again.
  auto try_place = [&](const Blob& b, const std::vector<Structure>& placed,
                       double margin, Ellipsoid& out) {
    const double rmax = *std::max_element(b.radii.begin(), b.radii.end());
    std::array<double, 3> room;
    for (int a = 0; a < 3; ++a) room[a] = body.radii[a] - rmax - margin;
    if (*std::min_element(room.begin(), room.end()) <= 0.0) return false;
    for (int attempt = 0; attempt < 64; ++attempt) {
      std::array<double, 3> u;
      double r2 = 0.0;
      for (int a = 0; a < 3; ++a) {
        u[a] = uniform(-1.0, 1.0);
        r2 += u[a] * u[a];
      }
      if (r2 > 1.0) continue;
      out = {{}, b.radii};
      for (int a = 0; a < 3; ++a) out.centre[a] = body.centre[a] + u[a] * room[a];
      bool clear = true;
      for (const auto& o : placed) {
        double d2 = 0.0;
        for (int a = 0; a < 3; ++a) {
          d2 += (out.centre[a] - o.shape.centre[a]) * (out.centre[a] - o.shape.centre[a]);
        }
        const double reach = rmax +
                             *std::max_element(o.shape.radii.begin(), o.shape.radii.end()) +
                             margin;
        clear = clear && d2 >= reach * reach;
      }
      if (clear) return true;
    }
    return false;
  };

  // Crowded grids shrink the medium blobs and the clearance step by step; the
  // small sphere keeps its size so the rare class stays populated.
  std::vector<Structure> structures;
  for (int shrink = 0; shrink < 8 && structures.size() < blobs.size(); ++shrink) {
    const double factor = std::pow(0.85, shrink);
    const double margin = std::max(0.0, 1.0 - 0.25 * shrink);
    for (int layout = 0; layout < 64 && structures.size() < blobs.size(); ++layout) {
      structures.clear();
      for (std::size_t i = 0; i < blobs.size(); ++i) {
        Blob b = blobs[i];
        if (i + 1 < blobs.size()) {
          for (auto& r : b.radii) r = std::max(0.9, r * factor);
        }
        Ellipsoid e;
        if (!try_place(b, structures, margin, e)) break;
        structures.push_back({e, b.label, b.mean});
      }
    }
  }
  if (structures.size() < blobs.size()) {
    throw std::invalid_argument("phantom extents " + to_string(extents) +
                                " too small to place all structures");
  }

  // Smooth multiplicative bias: a few low-frequency cosines.
  std::array<double, 3> phase, freq;
  for (int a = 0; a < 3; ++a) {
    phase[a] = uniform(0.0, 2.0 * std::numbers::pi);
    freq[a] = uniform(0.5, 1.0) * std::numbers::pi / ext[a];
  }

  Phantom out{Volume(extents, spacing, 0.0f),
              LabelMap{Grid<std::uint8_t>(extents, spacing, 0), num_classes}};
  std::normal_distribution<double> noise(0.0, kNoiseSigma);
  for (std::size_t z = 0; z < extents.d; ++z) {
    for (std::size_t y = 0; y < extents.h; ++y) {
      for (std::size_t x = 0; x < extents.w; ++x) {
        const double pz = static_cast<double>(z);
        const double py = static_cast<double>(y);
        const double px = static_cast<double>(x);
        int label = 0;
        double mean = kBackgroundMean;
        if (body.contains(pz, py, px)) {
          label = 1;
          mean = kBodyMean;
          for (const auto& s : structures) {
            if (s.shape.contains(pz, py, px)) {
              label = s.label;
              mean = s.mean;
            }
          }
        }
        const double bias =
            1.0 + kBiasAmplitude / 3.0 *
                      (std::cos(freq[0] * pz + phase[0]) +
                       std::cos(freq[1] * py + phase[1]) +
                       std::cos(freq[2] * px + phase[2]));
        const auto i = extents.index(z, y, x);
        out.volume.data[i] = static_cast<float>(mean * bias + noise(rng));
        out.labels.grid.data[i] = static_cast<std::uint8_t>(label);
      }
    }
  }
  return out;
}

}  // namespace canvolve
