#include "canvolve/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace canvolve {

double dice_score(const Mask& a, const Mask& b) {
  require_same_grid(a.extents, b.extents, "dice_score");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const bool ia = a.data[i] != 0;
    const bool ib = b.data[i] != 0;
    na += ia;
    nb += ib;
    both += ia && ib;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

SurfacePointSet extract_surface(const Mask& mask, const Spacing& spacing,
                                std::string source) {
  const auto& e = mask.extents;
  SurfacePointSet out;
  out.source = std::move(source);
  auto fg = [&](long z, long y, long x) {
    return e.contains(z, y, x) &&
           mask.data[e.index(static_cast<std::size_t>(z),
                             static_cast<std::size_t>(y),
                             static_cast<std::size_t>(x))] != 0;
  };
  for (long z = 0; z < static_cast<long>(e.d); ++z) {
    for (long y = 0; y < static_cast<long>(e.h); ++y) {
      for (long x = 0; x < static_cast<long>(e.w); ++x) {
        if (!fg(z, y, x)) continue;
        const bool interior = fg(z - 1, y, x) && fg(z + 1, y, x) &&
                              fg(z, y - 1, x) && fg(z, y + 1, x) &&
                              fg(z, y, x - 1) && fg(z, y, x + 1);
        if (!interior) {
          out.points.push_back({static_cast<double>(z) * spacing[0],
                                static_cast<double>(y) * spacing[1],
                                static_cast<double>(x) * spacing[2]});
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

NearestPointIndex::NearestPointIndex(const std::vector<Point3>& points) {
  if (points.empty()) {
    throw std::invalid_argument("nearest-point index over an empty set");
  }
  Point3 lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    lo = {std::min(lo.z, p.z), std::min(lo.y, p.y), std::min(lo.x, p.x)};
    hi = {std::max(hi.z, p.z), std::max(hi.y, p.y), std::max(hi.x, p.x)};
  }
  origin_ = lo;
  const double span[3] = {hi.z - lo.z, hi.y - lo.y, hi.x - lo.x};
  const double largest = std::max({span[0], span[1], span[2]});
  // Cell count stays within a small multiple of the point count.
  const double target = 2.0 * std::cbrt(static_cast<double>(points.size()));
  cell_ = largest > 0.0 ? std::max(largest / std::max(target, 1.0), 1e-9) : 1.0;
  for (int a = 0; a < 3; ++a) {
    dims_[a] = static_cast<long>(std::floor(span[a] / cell_)) + 1;
  }
  const std::size_t ncells =
      static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
  std::vector<std::uint32_t> counts(ncells + 1, 0);
  std::vector<std::uint32_t> cell_of_point(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const auto c = static_cast<std::size_t>(
        (cell_of(p.z, 0) * dims_[1] + cell_of(p.y, 1)) * dims_[2] +
        cell_of(p.x, 2));
    cell_of_point[i] = static_cast<std::uint32_t>(c);
    ++counts[c + 1];
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  cell_start_ = counts;
  sorted_.resize(points.size());
  auto fill = counts;
  for (std::size_t i = 0; i < points.size(); ++i) {
    sorted_[fill[cell_of_point[i]]++] = points[i];
  }
}

long NearestPointIndex::cell_of(double v, int axis) const {
  const double o = axis == 0 ? origin_.z : axis == 1 ? origin_.y : origin_.x;
  const long c = static_cast<long>(std::floor((v - o) / cell_));
  return std::clamp(c, 0L, dims_[axis] - 1);
}

double NearestPointIndex::nearest_squared(const Point3& q) const {
  const long cz = cell_of(q.z, 0), cy = cell_of(q.y, 1), cx = cell_of(q.x, 2);
  const long max_ring = std::max({dims_[0], dims_[1], dims_[2]});
  double best = std::numeric_limits<double>::infinity();
  auto scan_cell = [&](long z, long y, long x) {
    if (z < 0 || y < 0 || x < 0 || z >= dims_[0] || y >= dims_[1] ||
        x >= dims_[2]) {
      return;
    }
    const auto c = static_cast<std::size_t>((z * dims_[1] + y) * dims_[2] + x);
    for (auto k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
      best = std::min(best, squared_distance(q, sorted_[k]));
    }
  };
  for (long r = 0; r <= max_ring; ++r) {
    for (long z = cz - r; z <= cz + r; ++z) {
      for (long y = cy - r; y <= cy + r; ++y) {
        const bool face = std::abs(z - cz) == r || std::abs(y - cy) == r;
        if (face) {
          for (long x = cx - r; x <= cx + r; ++x) scan_cell(z, y, x);
        } else {
          scan_cell(z, y, cx - r);
          if (r > 0) scan_cell(z, y, cx + r);
        }
      }
    }
    // Every cell beyond ring r lies at least r cells away from the query.
    const double bound = static_cast<double>(r) * cell_ * (1.0 - 1e-9);
    if (best < bound * bound) break;
  }
  return best;
}

std::vector<double> surface_distances(const SurfacePointSet& from,
                                      const SurfacePointSet& to) {
  if (from.empty() || to.empty()) {
    throw std::invalid_argument("surface distance with an empty surface");
  }
  const NearestPointIndex index(to.points);
  std::vector<double> d(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    d[i] = std::sqrt(index.nearest_squared(from.points[i]));
  }
  return d;
}

double msd(const SurfacePointSet& p, const SurfacePointSet& q) {
  const auto dp = surface_distances(p, q);
  const auto dq = surface_distances(q, p);
  double total = 0.0;
  for (double v : dp) total += v;
  for (double v : dq) total += v;
  return total / static_cast<double>(dp.size() + dq.size());
}

double hausdorff(const SurfacePointSet& p, const SurfacePointSet& q) {
  const auto dp = surface_distances(p, q);
  const auto dq = surface_distances(q, p);
  return std::max(*std::max_element(dp.begin(), dp.end()),
                  *std::max_element(dq.begin(), dq.end()));
}

// ---------------------------------------------------------------------------

const char* to_string(MetricFlag flag) {
  switch (flag) {
    case MetricFlag::ok: return "ok";
    case MetricFlag::undefined: return "undefined";
    case MetricFlag::missing_pred: return "missing_pred";
    case MetricFlag::missing_truth: return "missing_truth";
  }
  return "?";
}

CaseMetrics evaluate_case(const LabelMap& pred, const LabelMap& truth,
                          std::string case_id) {
  require_same_grid(pred.extents(), truth.extents(), "evaluate_case");
  const int k = std::max(pred.num_classes, truth.num_classes);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CaseMetrics out;
  out.case_id = std::move(case_id);
  for (int cls = 1; cls < k; ++cls) {
    const Mask a = class_mask(pred, cls);
    const Mask b = class_mask(truth, cls);
    const bool has_a = count_foreground(a) > 0;
    const bool has_b = count_foreground(b) > 0;
    ClassMetrics m{cls, dice_score(a, b), nan, nan, MetricFlag::ok};
    if (!has_a && !has_b) {
      m.dsc = nan;
      m.flag = MetricFlag::undefined;
    } else if (!has_a) {
      m.flag = MetricFlag::missing_pred;
    } else if (!has_b) {
      m.flag = MetricFlag::missing_truth;
    } else {
      const auto sa = extract_surface(a, truth.spacing(), "pred");
      const auto sb = extract_surface(b, truth.spacing(), "truth");
      m.msd_mm = msd(sa, sb);
      m.hd_mm = hausdorff(sa, sb);
    }
    out.classes.push_back(m);
  }
  return out;
}

namespace {

SummaryStat summarize(const std::vector<double>& values) {
  SummaryStat s;
  s.n = values.size();
  if (values.empty()) {
    s.mean = s.sd = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

}  // namespace

std::vector<ClassSummary> MetricsReport::summary() const {
  int max_cls = 0;
  for (const auto& c : cases) {
    for (const auto& m : c.classes) max_cls = std::max(max_cls, m.cls);
  }
  std::vector<ClassSummary> out;
  for (int cls = 1; cls <= max_cls; ++cls) {
    std::vector<double> dsc, msd_v, hd;
    for (const auto& c : cases) {
      for (const auto& m : c.classes) {
        if (m.cls != cls) continue;
        if (m.flag != MetricFlag::undefined) dsc.push_back(m.dsc);
        if (m.has_distances()) {
          msd_v.push_back(m.msd_mm);
          hd.push_back(m.hd_mm);
        }
      }
    }
    out.push_back({cls, summarize(dsc), summarize(msd_v), summarize(hd)});
  }
  return out;
}

void write_metrics_csv(const MetricsReport& report, std::ostream& out) {
  out << "# schema-version " << kMetricsSchemaVersion << "\n";
  out << "case_id,class,dsc,msd_mm,hd_mm,flags\n";
  out << std::setprecision(10);
  for (const auto& c : report.cases) {
    for (const auto& m : c.classes) {
      out << c.case_id << ',' << m.cls << ',' << m.dsc << ',' << m.msd_mm << ','
          << m.hd_mm << ',' << to_string(m.flag) << '\n';
    }
  }
  out << std::fixed << std::setprecision(4);
  for (const auto& s : report.summary()) {
    out << "# class " << s.cls << ": dsc " << s.dsc.mean << "±" << s.dsc.sd
        << ", msd_mm " << s.msd_mm.mean << "±" << s.msd_mm.sd << ", hd_mm "
        << s.hd_mm.mean << "±" << s.hd_mm.sd << " (n=" << s.dsc.n << ")\n";
  }
  out << std::defaultfloat;
}

}  // namespace canvolve
