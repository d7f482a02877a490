#include "doctest.h"

#include <random>
#include <sstream>

#include "canvolve/metrics.hpp"
#include "oracles.hpp"

using namespace canvolve;

namespace {

SurfacePointSet points(std::initializer_list<Point3> pts) {
  SurfacePointSet s;
  s.points = pts;
  return s;
}

Mask box_mask(Extents e, std::size_t z0, std::size_t z1, std::size_t y0, std::size_t y1,
              std::size_t x0, std::size_t x1) {
  Mask m(e, {1, 1, 1}, 0);
  for (std::size_t z = z0; z <= z1; ++z)
    for (std::size_t y = y0; y <= y1; ++y)
      for (std::size_t x = x0; x <= x1; ++x) m.at(z, y, x) = 1;
  return m;
}

}  // namespace

TEST_CASE("dice score hand cases") {
  Mask a({1, 1, 8}, {1, 1, 1}, 0), b = a;
  a.data = {1, 1, 1, 1, 0, 0, 0, 0};
  CHECK(dice_score(a, a) == 1.0);
  b.data = {0, 0, 1, 1, 1, 1, 0, 0};
  CHECK(dice_score(a, b) == 0.5);
  b.data = {0, 0, 0, 0, 1, 1, 1, 1};
  CHECK(dice_score(a, b) == 0.0);
  Mask empty({1, 1, 8}, {1, 1, 1}, 0);
  CHECK(dice_score(empty, empty) == 1.0);
}

TEST_CASE("surface extraction") {
  Mask single({3, 3, 3}, {1, 1, 1}, 0);
  single.at(1, 1, 1) = 1;
  auto s = extract_surface(single);
  REQUIRE(s.size() == 1);
  CHECK(s.points[0] == Point3{1, 1, 1});

  const Mask cube = box_mask({5, 5, 5}, 1, 3, 1, 3, 1, 3);
  CHECK(extract_surface(cube).size() == 26);

  const Mask rod = box_mask({1, 1, 5}, 0, 0, 0, 0, 0, 4);
  CHECK(extract_surface(rod).size() == 5);

  // The grid border counts as background.
  const Mask full = box_mask({3, 3, 3}, 0, 2, 0, 2, 0, 2);
  CHECK(extract_surface(full).size() == 26);

  CHECK(extract_surface(Mask({2, 2, 2}, {1, 1, 1}, 0)).empty());

  auto scaled = extract_surface(single, {2.0f, 0.5f, 3.0f});
  CHECK(scaled.points[0] == Point3{2.0, 0.5, 3.0});
}

TEST_CASE("surface distance hand cases") {
  const auto p = points({{0, 0, 0}});
  CHECK(msd(p, points({{3, 4, 0}})) == 5.0);
  CHECK(hausdorff(p, points({{3, 4, 0}})) == 5.0);

  const auto q = points({{1, 0, 0}, {0, 2, 0}});
  CHECK(msd(p, q) == 4.0 / 3.0);
  CHECK(hausdorff(p, q) == 2.0);
  CHECK(msd(p, p) == 0.0);
  CHECK(hausdorff(q, q) == 0.0);
  CHECK_THROWS_AS(msd(p, SurfacePointSet{}), std::invalid_argument);
  CHECK_THROWS_AS(hausdorff(SurfacePointSet{}, p), std::invalid_argument);
}

TEST_CASE("nearest point index equals exhaustive search") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  std::vector<Point3> cloud;
  for (int i = 0; i < 500; ++i) cloud.push_back({u(rng), u(rng) * 0.1, u(rng)});
  NearestPointIndex index(cloud);
  for (int i = 0; i < 300; ++i) {
    const Point3 q{u(rng) * 2, u(rng), u(rng)};
    double best = 1e300;
    for (const auto& c : cloud) best = std::min(best, squared_distance(q, c));
    CHECK(index.nearest_squared(q) == best);
  }
  // Degenerate clouds: one point, coincident points, a line.
  NearestPointIndex one({{1, 2, 3}});
  CHECK(one.nearest_squared({1, 2, 5}) == 4.0);
  NearestPointIndex same({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
  CHECK(same.nearest_squared({0, 3, 4}) == 25.0);
  std::vector<Point3> line;
  for (int i = 0; i < 50; ++i) line.push_back({0, 0, static_cast<double>(i)});
  NearestPointIndex li(line);
  CHECK(li.nearest_squared({0, 1, 10.25}) == 1.0 + 0.0625);
}

TEST_CASE("MSD and HD match brute force on random masks") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> ext(2, 12);
  for (int trial = 0; trial < 40; ++trial) {
    const Extents e{ext(rng), ext(rng), ext(rng)};
    const Spacing sp{0.5f + static_cast<float>(trial % 3), 1.0f, 1.5f};
    const Mask a = oracle::random_mask(rng, e, sp);
    const Mask b = oracle::random_mask(rng, e, sp);
    const auto sa = extract_surface(a), sb = extract_surface(b);
    const auto oa = oracle::surface(a), ob = oracle::surface(b);
    REQUIRE(sa.size() == oa.size());
    const double m = msd(sa, sb), h = hausdorff(sa, sb);
    CHECK(m == oracle::msd(oa, ob));
    CHECK(h == oracle::hausdorff(oa, ob));
    CHECK(h >= m);
    CHECK(hausdorff(sb, sa) == h);
    CHECK(msd(sb, sa) == doctest::Approx(m).epsilon(1e-14));
  }
}

TEST_CASE("spacing scale multiplies distances and leaves DSC alone") {
  std::mt19937_64 rng(8);
  const Mask a = oracle::random_mask(rng, {8, 8, 8});
  const Mask b = oracle::random_mask(rng, {8, 8, 8});
  const double m1 = msd(extract_surface(a, {1, 1, 1}), extract_surface(b, {1, 1, 1}));
  const double h1 = hausdorff(extract_surface(a, {1, 1, 1}), extract_surface(b, {1, 1, 1}));
  const double m2 = msd(extract_surface(a, {2, 2, 2}), extract_surface(b, {2, 2, 2}));
  const double h2 = hausdorff(extract_surface(a, {2, 2, 2}), extract_surface(b, {2, 2, 2}));
  CHECK(m2 == 2.0 * m1);
  CHECK(h2 == 2.0 * h1);
}

TEST_CASE("Hausdorff triangle inequality on random triples") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 20; ++i) {
    const auto p = extract_surface(oracle::random_mask(rng, {7, 7, 7}));
    const auto q = extract_surface(oracle::random_mask(rng, {7, 7, 7}));
    const auto r = extract_surface(oracle::random_mask(rng, {7, 7, 7}));
    CHECK(hausdorff(p, q) <= hausdorff(p, r) + hausdorff(r, q) + 1e-12);
  }
}

TEST_CASE("evaluate_case flags and perfect agreement") {
  LabelMap t{Grid<std::uint8_t>({4, 4, 4}, {1, 1, 1}, 0), 4};
  for (std::size_t i = 0; i < 16; ++i) t.grid.data[i] = 1;
  for (std::size_t i = 16; i < 24; ++i) t.grid.data[i] = 2;
  auto cm = evaluate_case(t, t, "same");
  REQUIRE(cm.classes.size() == 3);
  CHECK(cm.classes[0].dsc == 1.0);
  CHECK(cm.classes[0].msd_mm == 0.0);
  CHECK(cm.classes[0].hd_mm == 0.0);
  CHECK(cm.classes[0].flag == MetricFlag::ok);
  CHECK(cm.classes[2].flag == MetricFlag::undefined);

  LabelMap p = t;
  for (std::size_t i = 16; i < 24; ++i) p.grid.data[i] = 0;
  p.grid.data[63] = 3;
  cm = evaluate_case(p, t);
  CHECK(cm.classes[1].flag == MetricFlag::missing_pred);
  CHECK(cm.classes[1].dsc == 0.0);
  CHECK(cm.classes[2].flag == MetricFlag::missing_truth);

  LabelMap other{Grid<std::uint8_t>({4, 4, 5}, {1, 1, 1}, 0), 4};
  CHECK_THROWS_AS(evaluate_case(other, t), GridMismatch);
}

TEST_CASE("evaluate_case matches brute force on a checkerboard versus a solid block") {
  LabelMap truth{Grid<std::uint8_t>({6, 6, 6}, {1.0f, 0.5f, 2.0f}, 0), 2};
  LabelMap pred = truth;
  for (std::size_t z = 1; z < 5; ++z)
    for (std::size_t y = 1; y < 5; ++y)
      for (std::size_t x = 1; x < 5; ++x) {
        truth.grid.at(z, y, x) = 1;
        pred.grid.at(z, y, x) = (z + y + x) % 2 == 0 ? 1 : 0;
      }
  const auto cm = evaluate_case(pred, truth);
  const Mask pm = class_mask(pred, 1), tm = class_mask(truth, 1);
  const auto op = oracle::surface(pm), ot = oracle::surface(tm);
  std::size_t inter = 0, np = 0, nt = 0;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    inter += pm.data[i] && tm.data[i];
    np += pm.data[i];
    nt += tm.data[i];
  }
  CHECK(cm.classes[0].dsc == 2.0 * static_cast<double>(inter) / static_cast<double>(np + nt));
  CHECK(cm.classes[0].msd_mm == oracle::msd(op, ot));
  CHECK(cm.classes[0].hd_mm == oracle::hausdorff(op, ot));
}

TEST_CASE("report summary and CSV") {
  LabelMap t{Grid<std::uint8_t>({3, 3, 3}, {1, 1, 1}, 0), 2};
  t.grid.data[13] = 1;
  MetricsReport rep;
  for (int i = 0; i < 3; ++i) rep.cases.push_back(evaluate_case(t, t, "c" + std::to_string(i)));
  auto s = rep.summary();
  REQUIRE(s.size() == 1);
  CHECK(s[0].dsc.mean == 1.0);
  CHECK(s[0].dsc.sd == 0.0);
  CHECK(s[0].dsc.n == 3);

  // Sample standard deviation: values 1 and 0 give mean 0.5, sd sqrt(0.5).
  MetricsReport two;
  two.cases.push_back(evaluate_case(t, t, "a"));
  LabelMap miss = t;
  miss.grid.data[13] = 0;
  miss.grid.data[0] = 1;
  two.cases.push_back(evaluate_case(miss, t, "b"));
  s = two.summary();
  CHECK(s[0].dsc.mean == 0.5);
  CHECK(s[0].dsc.sd == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));

  std::ostringstream os;
  write_metrics_csv(rep, os);
  const std::string csv = os.str();
  CHECK(csv.rfind("# schema-version 1\n", 0) == 0);
  CHECK(csv.find("case_id,class,dsc,msd_mm,hd_mm,flags\n") != std::string::npos);
  CHECK(csv.find("c1,1,1") != std::string::npos);
  CHECK(csv.find("# class 1") != std::string::npos);
}
