#include "canvolve/augment.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace canvolve {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

Mat3 rotation_matrix(int axis, double c, double s) {
  // Rotation in the plane of the two axes other than `axis`.
  const int u = (axis + 1) % 3;
  const int v = (axis + 2) % 3;
  Mat3 m{{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
  m[u][u] = c;
  m[u][v] = -s;
  m[v][u] = s;
  m[v][v] = c;
  return m;
}

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

// Per-voxel displacement from a coarse random lattice, trilinearly upsampled.
struct ElasticField {
  int n = 0;
  std::vector<std::array<double, 3>> lattice;

  std::array<double, 3> at(const Extents& e, double z, double y,
                           double x) const {
    const double pos[3] = {
        e.d > 1 ? z / static_cast<double>(e.d - 1) * (n - 1) : 0.0,
        e.h > 1 ? y / static_cast<double>(e.h - 1) * (n - 1) : 0.0,
        e.w > 1 ? x / static_cast<double>(e.w - 1) * (n - 1) : 0.0};
    int i0[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
      i0[a] = std::min(static_cast<int>(std::floor(pos[a])), n - 2);
      f[a] = pos[a] - i0[a];
    }
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (int c = 0; c < 8; ++c) {
      const int dz = c >> 2 & 1, dy = c >> 1 & 1, dx = c & 1;
      const double w = (dz ? f[0] : 1 - f[0]) * (dy ? f[1] : 1 - f[1]) *
                       (dx ? f[2] : 1 - f[2]);
      const auto& d = lattice[((i0[0] + dz) * n + i0[1] + dy) * n + i0[2] + dx];
      for (int a = 0; a < 3; ++a) out[a] += w * d[a];
    }
    return out;
  }
};

AugmentedCase resample(const Volume& volume, const LabelMap& labels,
                       const SpatialTransform& t, const ElasticField* elastic) {
  require_same_grid(volume.extents, labels.extents(), "augment");
  const auto& e = volume.extents;
  AugmentedCase out{Volume(e, volume.spacing, 0.0f),
                    LabelMap{Grid<std::uint8_t>(e, labels.spacing(), 0),
                             labels.num_classes}};
  const double c[3] = {0.5 * (static_cast<double>(e.d) - 1.0),
                       0.5 * (static_cast<double>(e.h) - 1.0),
                       0.5 * (static_cast<double>(e.w) - 1.0)};
  auto sample_volume = [&](long z, long y, long x) -> double {
    if (!e.contains(z, y, x)) return 0.0;
    return volume.data[e.index(static_cast<std::size_t>(z),
                               static_cast<std::size_t>(y),
                               static_cast<std::size_t>(x))];
  };
  for (std::size_t z = 0; z < e.d; ++z) {
    for (std::size_t y = 0; y < e.h; ++y) {
      for (std::size_t x = 0; x < e.w; ++x) {
        const double p[3] = {static_cast<double>(z) - c[0],
                             static_cast<double>(y) - c[1],
                             static_cast<double>(x) - c[2]};
        double s[3];
        for (int a = 0; a < 3; ++a) {
          s[a] = t.matrix[a][0] * p[0] + t.matrix[a][1] * p[1] +
                 t.matrix[a][2] * p[2] + c[a] - t.translation[a];
        }
        if (elastic) {
          const auto d = elastic->at(e, static_cast<double>(z),
                                     static_cast<double>(y),
                                     static_cast<double>(x));
          for (int a = 0; a < 3; ++a) s[a] += d[a];
        }
        for (double& v : s) v = snap(v);
        const auto i = e.index(z, y, x);

        const long n0[3] = {std::lround(s[0]), std::lround(s[1]),
                            std::lround(s[2])};
        if (e.contains(n0[0], n0[1], n0[2])) {
          out.labels.grid.data[i] = labels.grid.data[e.index(
              static_cast<std::size_t>(n0[0]), static_cast<std::size_t>(n0[1]),
              static_cast<std::size_t>(n0[2]))];
        }

        long f0[3];
        double fr[3];
        for (int a = 0; a < 3; ++a) {
          f0[a] = static_cast<long>(std::floor(s[a]));
          fr[a] = s[a] - static_cast<double>(f0[a]);
        }
        double v = 0.0;
        for (int k = 0; k < 8; ++k) {
          const int dz = k >> 2 & 1, dy = k >> 1 & 1, dx = k & 1;
          const double w = (dz ? fr[0] : 1 - fr[0]) * (dy ? fr[1] : 1 - fr[1]) *
                           (dx ? fr[2] : 1 - fr[2]);
          if (w == 0.0) continue;
          v += w * sample_volume(f0[0] + dz, f0[1] + dy, f0[2] + dx);
        }
        out.volume.data[i] = static_cast<float>(v);
      }
    }
  }
  return out;
}

}  // namespace

SpatialTransform SpatialTransform::shift(double dz, double dy, double dx) {
  SpatialTransform t;
  t.translation = {dz, dy, dx};
  return t;
}

SpatialTransform SpatialTransform::rotation(int axis, double radians) {
  // Output samples the source at the inverse rotation.
  SpatialTransform t;
  t.matrix = rotation_matrix(axis, std::cos(radians), -std::sin(radians));
  return t;
}

SpatialTransform SpatialTransform::quarter_turns(int axis, int turns) {
  static constexpr double kCos[4] = {1.0, 0.0, -1.0, 0.0};
  static constexpr double kSin[4] = {0.0, 1.0, 0.0, -1.0};
  const int q = ((turns % 4) + 4) % 4;
  SpatialTransform t;
  t.matrix = rotation_matrix(axis, kCos[q], -kSin[q]);
  return t;
}

AugmentedCase apply_transform(const Volume& volume, const LabelMap& labels,
                              const SpatialTransform& transform) {
  return resample(volume, labels, transform, nullptr);
}

AugmentedCase augment(const Volume& volume, const LabelMap& labels,
                      std::uint64_t seed, const AugmentOps& ops,
                      const AugmentRanges& ranges) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  SpatialTransform t;
  if (ops.affine) {
    Mat3 m{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        m[i][j] = i == j ? 1.0 + ranges.max_scale * sym(rng)
                         : ranges.max_shear * sym(rng);
      }
    }
    t.matrix = multiply(t.matrix, m);
  }
  if (ops.rotation) {
    const int axis = static_cast<int>(rng() % 3);
    const double angle =
        ranges.max_rotation_degrees * sym(rng) * std::numbers::pi / 180.0;
    t.matrix = multiply(t.matrix, SpatialTransform::rotation(axis, angle).matrix);
  }
  if (ops.shift) {
    for (auto& v : t.translation) {
      v = std::round(ranges.max_shift_voxels * sym(rng));
    }
  }
  if (!ops.elastic) return resample(volume, labels, t, nullptr);

  ElasticField field;
  field.n = std::max(ranges.elastic_control_points, 2);
  field.lattice.resize(static_cast<std::size_t>(field.n * field.n * field.n));
  for (auto& d : field.lattice) {
    for (auto& v : d) v = ranges.elastic_magnitude_voxels * sym(rng);
  }
  return resample(volume, labels, t, &field);
}

}  // namespace canvolve
