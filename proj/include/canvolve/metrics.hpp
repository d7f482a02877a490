#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "canvolve/grid.hpp"

namespace canvolve {

struct Point3 {
  double z = 0.0;
  double y = 0.0;
  double x = 0.0;
  friend bool operator==(const Point3&, const Point3&) = default;
};

inline double squared_distance(const Point3& a, const Point3& b) {
  const double dz = a.z - b.z;
  const double dy = a.y - b.y;
  const double dx = a.x - b.x;
  return dz * dz + dy * dy + dx * dx;
}

/// Boundary voxel centres in millimetres, in scan order.
struct SurfacePointSet {
  std::vector<Point3> points;
  std::string source;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

/// 2|A∩B| / (|A|+|B|); 1.0 when both masks are empty.
double dice_score(const Mask& a, const Mask& b);

/// Foreground voxels with at least one background 6-neighbour. Voxels outside
/// the grid count as background. An empty mask yields an empty set.
SurfacePointSet extract_surface(const Mask& mask, const Spacing& spacing,
                                std::string source = {});
inline SurfacePointSet extract_surface(const Mask& mask) {
  return extract_surface(mask, mask.spacing);
}

/// Uniform-grid bucket index answering exact nearest-point queries.
class NearestPointIndex {
 public:
  explicit NearestPointIndex(const std::vector<Point3>& points);

  /// Squared Euclidean distance from `q` to the closest indexed point.
  double nearest_squared(const Point3& q) const;

 private:
  long cell_of(double v, int axis) const;

  Point3 origin_;
  double cell_ = 1.0;
  long dims_[3] = {1, 1, 1};
  std::vector<std::uint32_t> cell_start_;
  std::vector<Point3> sorted_;  // points grouped by cell
};

/// d(p, Q) for every p in `from`, in order.
std::vector<double> surface_distances(const SurfacePointSet& from,
                                      const SurfacePointSet& to);

/// Symmetric mean surface distance. Throws std::invalid_argument on an empty set.
double msd(const SurfacePointSet& p, const SurfacePointSet& q);

/// Symmetric Hausdorff distance. Throws std::invalid_argument on an empty set.
double hausdorff(const SurfacePointSet& p, const SurfacePointSet& q);

enum class MetricFlag : std::uint8_t {
  ok,
  undefined,      // class absent from both prediction and truth
  missing_pred,   // present in truth only
  missing_truth,  // present in prediction only
};

const char* to_string(MetricFlag flag);

struct ClassMetrics {
  int cls = 0;
  double dsc = 0.0;
  double msd_mm = 0.0;
  double hd_mm = 0.0;
  MetricFlag flag = MetricFlag::ok;

  bool has_distances() const { return flag == MetricFlag::ok; }
};

struct CaseMetrics {
  std::string case_id;
  std::vector<ClassMetrics> classes;  // foreground classes 1..K-1
};

struct SummaryStat {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

struct ClassSummary {
  int cls = 0;
  SummaryStat dsc;
  SummaryStat msd_mm;
  SummaryStat hd_mm;
};

struct MetricsReport {
  std::vector<CaseMetrics> cases;

  /// Per-class mean and sample standard deviation over cases with defined
  /// values.
  std::vector<ClassSummary> summary() const;
};

CaseMetrics evaluate_case(const LabelMap& pred, const LabelMap& truth,
                          std::string case_id = {});

inline constexpr int kMetricsSchemaVersion = 1;

/// CSV with a schema comment, one row per case x class and a mean±SD footer.
void write_metrics_csv(const MetricsReport& report, std::ostream& out);

}  // namespace canvolve
