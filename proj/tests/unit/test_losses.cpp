#include "doctest.h"

#include <cmath>

#include "canvolve/grad_check.hpp"
#include "canvolve/losses.hpp"
#include "canvolve/nn_ops.hpp"
#include "nn_helpers.hpp"

using namespace canvolve;

namespace {

// Probability tensor 1 x K x 1 x 1 x n from class-major values.
Tensor probs_of(std::size_t k, std::vector<Real> v) {
  const std::size_t n = v.size() / k;
  return Tensor({1, k, 1, 1, n}, std::move(v));
}

Real eval(const std::function<Var(Tape&, Var)>& f, const Tensor& p) {
  Tape t;
  return t.value(f(t, t.constant(p))).item();
}

// Random interior probabilities normalised over channels.
Tensor random_probs(std::size_t k, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Tensor p({1, k, 1, 1, n});
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t c = 0; c < k; ++c) s += (p[c * n + i] = static_cast<Real>(u(rng)));
    for (std::size_t c = 0; c < k; ++c) p[c * n + i] = static_cast<Real>(p[c * n + i] / s);
  }
  return p;
}

Tensor random_onehot(std::size_t k, std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> u(0, k - 1);
  Tensor q({1, k, 1, 1, n});
  for (std::size_t i = 0; i < n; ++i) q[u(rng) * n + i] = 1;
  return q;
}

// Independent loops over the definitions.
double ref_dice_class(const Tensor& p, const Tensor& q, std::size_t c) {
  const std::size_t n = p.spatial_size();
  double num = 0, pp = 0, qq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = p[c * n + i], b = q[c * n + i];
    num += a * b;
    pp += a * a;
    qq += b * b;
  }
  return pp + qq == 0 ? 0.0 : 1.0 - 2.0 * num / (pp + qq);
}

double ref_mse_class(const Tensor& p, const Tensor& q, std::size_t c) {
  const std::size_t n = p.spatial_size();
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += (p[c * n + i] - q[c * n + i]) * (p[c * n + i] - q[c * n + i]);
  return s / static_cast<double>(n);
}

double ref_focal(const Tensor& p, const Tensor& q, double gamma, const std::vector<double>& alpha,
                 double eps) {
  const std::size_t k = p.dim(1), n = p.spatial_size();
  double total = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) {
      if (q[c * n + i] == 0) continue;
      const double pc = p[c * n + i];
      total += -alpha[c] * std::pow(1.0 - pc, gamma) * std::log(std::max(pc, eps));
    }
  return total / static_cast<double>(n);
}

}  // namespace

TEST_CASE("one_hot") {
  LabelMap l{Grid<std::uint8_t>({1, 2, 2}, {1, 1, 1}), 3};
  l.grid.data = {0, 2, 1, 0};
  const Tensor q = one_hot(l, 3);
  CHECK(q.shape() == Shape{1, 3, 1, 2, 2});
  CHECK(q[0] == 1);
  CHECK(q[4] == 0);
  CHECK(q[8] == 0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(q[i] + q[4 + i] + q[8 + i] == 1);
  for (std::size_t i = 0; i < 4; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < 3; ++c)
      if (q[c * 4 + i] > q[best * 4 + i]) best = c;
    CHECK(best == l.grid.data[i]);
  }
  l.grid.data[0] = 3;
  CHECK_THROWS_AS(one_hot(l, 3), std::invalid_argument);
}

TEST_CASE("class weights") {
  CHECK(ClassWeights::uniform(3).values == std::vector<Real>{1, 1, 1});
  const auto w = ClassWeights::inverse_frequency({90, 9, 1, 0});
  CHECK(w.values[2] > w.values[1]);
  CHECK(w.values[1] > w.values[0]);
  CHECK(w.values[3] == w.values[2]);
  CHECK(w.normalized().total() == doctest::Approx(1.0));
  ClassWeights neg{{1, -1}};
  CHECK_THROWS_AS(neg.validate(2), std::invalid_argument);
  ClassWeights zero{{0, 0}};
  CHECK_THROWS_AS(zero.validate(2), std::invalid_argument);
  CHECK_THROWS_AS(ClassWeights::uniform(3).validate(2), std::invalid_argument);
  CHECK(parse_loss_kind("dsf") == LossKind::dsf);
  CHECK(parse_loss_kind("ce") == LossKind::weighted_ce);
  CHECK_THROWS_AS(parse_loss_kind("mse"), std::invalid_argument);
}

TEST_CASE("dice loss hand cases") {
  const auto w1 = ClassWeights{{1}};
  const Tensor q = probs_of(1, {1, 1, 0, 0, 0, 0, 0, 0});
  auto dice = [&](const Tensor& truth) {
    return [&truth, &w1](Tape& t, Var p) { return dice_loss(t, p, truth, w1); };
  };
  CHECK(eval(dice(q), q) == 0);
  const Tensor p = probs_of(1, {0, 0, 1, 1, 0, 0, 0, 0});
  CHECK(eval(dice(q), p) == 1);
}

TEST_CASE("DSL hand cases") {
  const Tensor q = probs_of(1, {1, 1, 0, 0, 0, 0, 0, 0});
  const Tensor p = probs_of(1, {0, 0, 1, 1, 0, 0, 0, 0});
  auto f = [&](Tape& t, Var v) { return dsl(t, v, q, ClassWeights{{1}}); };
  CHECK(eval(f, p) == 1.5);
  CHECK(eval(f, q) == 0);

  // A zero-weight class does not contribute.
  std::mt19937_64 rng(3);
  const Tensor p2 = random_probs(2, 16, rng), q2 = random_onehot(2, 16, rng);
  Tensor p1({1, 1, 1, 1, 16}), q1({1, 1, 1, 1, 16});
  for (std::size_t i = 0; i < 16; ++i) {
    p1[i] = p2[i];
    q1[i] = q2[i];
  }
  const Real two = eval([&](Tape& t, Var v) { return dsl(t, v, q2, ClassWeights{{1, 0}}); }, p2);
  const Real one = eval([&](Tape& t, Var v) { return dsl(t, v, q1, ClassWeights{{1}}); }, p1);
  CHECK(two == one);
}

TEST_CASE("dice form identity on random tensors") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = trial % 2 ? 2 : 6;
    std::uniform_real_distribution<double> u(0, 1);
    Tensor p({1, k, 2, 3, 4}), q({1, k, 2, 3, 4});
    for (auto& v : p.values()) v = u(rng);
    for (auto& v : q.values()) v = u(rng);
    const ClassWeights w = ClassWeights::uniform(static_cast<int>(k));
    const Real got = eval([&](Tape& t, Var v) { return dice_loss(t, v, q, w); }, p);
    double ref = 0;
    for (std::size_t c = 0; c < k; ++c) ref += ref_dice_class(p, q, c);
    ref /= static_cast<double>(k);
    CHECK(std::abs(got - ref) < 1e-12);
  }
}

TEST_CASE("focal loss values") {
  const Tensor q = probs_of(2, {1, 0});
  const Tensor p = probs_of(2, {0.5, 0.5});
  LossConfig cfg;
  cfg.alpha = {1, 1};
  cfg.weights = ClassWeights::uniform(2);
  const Real fl = eval([&](Tape& t, Var v) { return focal_loss(t, v, q, cfg); }, p);
  CHECK(fl == doctest::Approx(-0.25 * std::log(0.5)).epsilon(1e-14));
  CHECK(fl == doctest::Approx(0.1733).epsilon(1e-3));
  CHECK(eval([&](Tape& t, Var v) { return focal_loss(t, v, q, cfg); }, q) == 0);

  std::mt19937_64 rng(5);
  const Tensor pr = random_probs(3, 40, rng), qr = random_onehot(3, 40, rng);
  LossConfig g0;
  g0.gamma = 0;
  g0.alpha = {1, 1, 1};
  g0.weights = ClassWeights::uniform(3);
  const Real f0 = eval([&](Tape& t, Var v) { return focal_loss(t, v, qr, g0); }, pr);
  const Real ce = eval([&](Tape& t, Var v) { return weighted_ce(t, v, qr, ClassWeights::uniform(3)); }, pr);
  CHECK(std::abs(f0 - ce) < 1e-9);
  CHECK(std::abs(f0 - ref_focal(pr, qr, 0, {1, 1, 1}, 1e-7)) < 1e-12);

  LossConfig g2;
  g2.alpha = {0.2, 0.3, 0.5};
  g2.weights = ClassWeights::uniform(3);
  const Real f2 = eval([&](Tape& t, Var v) { return focal_loss(t, v, qr, g2); }, pr);
  CHECK(std::abs(f2 - ref_focal(pr, qr, 2, {0.2, 0.3, 0.5}, 1e-7)) < 1e-12);
}

TEST_CASE("weighted cross-entropy values") {
  const std::size_t k = 4;
  Tensor uniform({1, k, 1, 1, 5}, Real(0.25));
  std::mt19937_64 rng(6);
  const Tensor q = random_onehot(k, 5, rng);
  const Real ce = eval([&](Tape& t, Var v) { return weighted_ce(t, v, q, ClassWeights::uniform(4)); }, uniform);
  CHECK(ce == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  const Real perfect = eval([&](Tape& t, Var v) { return weighted_ce(t, v, q, ClassWeights::uniform(4)); }, q);
  CHECK(perfect >= 0);
  CHECK(perfect < 1e-12);

  const Tensor p = random_probs(k, 30, rng), q2 = random_onehot(k, 30, rng);
  const ClassWeights w{{0.1, 2, 0.7, 1.2}};
  LossConfig fc;
  fc.gamma = 0;
  fc.alpha = w.values;
  fc.weights = w;
  const Real a = eval([&](Tape& t, Var v) { return weighted_ce(t, v, q2, w); }, p);
  const Real b = eval([&](Tape& t, Var v) { return focal_loss(t, v, q2, fc); }, p);
  CHECK(std::abs(a - b) < 1e-9);
}

TEST_CASE("DSF composition") {
  std::mt19937_64 rng(7);
  const Tensor p = random_probs(3, 27, rng), q = random_onehot(3, 27, rng);
  LossConfig cfg;
  cfg.weights = ClassWeights{{0.2, 1, 3}};
  const Real d = eval([&](Tape& t, Var v) { return dsl(t, v, q, cfg.weights); }, p);
  const Real f = eval([&](Tape& t, Var v) { return focal_loss(t, v, q, cfg); }, p);
  const Real s = eval([&](Tape& t, Var v) { return dsf(t, v, q, cfg); }, p);
  CHECK(s == doctest::Approx(d + 10 * f).epsilon(1e-14));
  CHECK(s >= d);
  CHECK(d >= 0);
  CHECK(eval([&](Tape& t, Var v) { return dsf(t, v, q, cfg); }, q) == 0);

  LossConfig no_fl = cfg;
  no_fl.lambda_fl = 0;
  CHECK(eval([&](Tape& t, Var v) { return dsf(t, v, q, no_fl); }, p) == d);

  // Independent evaluation of the DSL definition with normalised weights.
  double ref_dsl = 0, wsum = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    const double wc = cfg.weights.values[c];
    ref_dsl += wc * (ref_dice_class(p, q, c) + ref_mse_class(p, q, c));
    wsum += wc;
  }
  ref_dsl /= wsum;
  CHECK(std::abs(d - ref_dsl) < 1e-12);
}

TEST_CASE("DSF on the disjoint case with confident wrong probabilities") {
  const Real eps = 1e-7;
  // Two classes over 8 voxels; class 1 truth on voxels 0-1, prediction puts
  // class 1 on voxels 2-3 with probability 1 - eps.
  std::vector<Real> pv(16, 0), qv(16, 0);
  for (std::size_t i = 0; i < 8; ++i) {
    qv[i] = i < 2 ? 0 : 1;
    qv[8 + i] = i < 2 ? 1 : 0;
  }
  for (std::size_t i = 0; i < 8; ++i) {
    const bool cls1 = i == 2 || i == 3;
    pv[8 + i] = cls1 ? 1 - eps : eps;
    pv[i] = 1 - pv[8 + i];
  }
  const Tensor p({1, 2, 1, 1, 8}, pv), q({1, 2, 1, 1, 8}, qv);
  LossConfig cfg;
  cfg.weights = ClassWeights{{0, 1}};
  cfg.alpha = {0, 1};
  const Real got = eval([&](Tape& t, Var v) { return dsf(t, v, q, cfg); }, p);

  // Class 1: Psi = 2(1-eps)^2 + 2 + 4 eps^2 ... evaluated directly.
  double psi = 0, pp = 0, qq = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    psi += (pv[8 + i] - qv[8 + i]) * (pv[8 + i] - qv[8 + i]);
    pp += pv[8 + i] * pv[8 + i];
    qq += qv[8 + i] * qv[8 + i];
  }
  const double dsl_ref = psi / (pp + qq) + psi / 8.0;
  const double fl_ref = 2.0 * (-std::pow(1 - eps, 2) * std::log(eps)) / 8.0;
  CHECK(got == doctest::Approx(dsl_ref + 10 * fl_ref).epsilon(1e-12));
  CHECK(dsl_ref == doctest::Approx(1.5).epsilon(1e-6));
}

TEST_CASE("losses are invariant to a joint permutation of classes and weights") {
  std::mt19937_64 rng(8);
  const Tensor p = random_probs(3, 20, rng), q = random_onehot(3, 20, rng);
  const std::size_t perm[3] = {2, 0, 1};
  Tensor pp(p.shape()), qp(q.shape());
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 20; ++i) {
      pp[perm[c] * 20 + i] = p[c * 20 + i];
      qp[perm[c] * 20 + i] = q[c * 20 + i];
    }
  LossConfig a;
  a.weights = ClassWeights{{0.5, 1.0, 2.0}};
  LossConfig b;
  b.weights.values.resize(3);
  for (std::size_t c = 0; c < 3; ++c) b.weights.values[perm[c]] = a.weights.values[c];
  for (LossKind kind : {LossKind::dice, LossKind::dsl, LossKind::focal, LossKind::dsf, LossKind::weighted_ce}) {
    const Real x = eval([&](Tape& t, Var v) { return compute_loss(kind, t, v, q, a); }, p);
    const Real y = eval([&](Tape& t, Var v) { return compute_loss(kind, t, v, qp, b); }, pp);
    CHECK(x == doctest::Approx(y).epsilon(1e-13));
  }
}

TEST_CASE("one squared-difference pass per class per call") {
  std::mt19937_64 rng(9);
  const Tensor p = random_probs(4, 10, rng), q = random_onehot(4, 10, rng);
  LossConfig cfg;
  cfg.weights = ClassWeights::uniform(4);
  for (LossKind kind : {LossKind::dice, LossKind::dsl, LossKind::dsf}) {
    const auto before = squared_difference_passes();
    eval([&](Tape& t, Var v) { return compute_loss(kind, t, v, q, cfg); }, p);
    CHECK(squared_difference_passes() - before == 4);
  }
}

TEST_CASE("loss gradients pass finite-difference checks") {
  std::mt19937_64 rng(10);
  const Tensor q = random_onehot(3, 27, rng);
  Tensor logits({1, 3, 3, 3, 3});
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& v : logits.values()) v = u(rng);
  LossConfig cfg;
  cfg.weights = ClassWeights{{0.3, 1, 2}};
  Tensor q5({1, 3, 3, 3, 3}, std::vector<Real>(q.values().begin(), q.values().end()));
  for (LossKind kind : {LossKind::dice, LossKind::dsl, LossKind::focal, LossKind::dsf, LossKind::weighted_ce}) {
    auto f = [&](Tape& t, Var v) { return compute_loss(kind, t, softmax_channels(t, v), q5, cfg); };
    CHECK(grad_check(f, logits, 1e-5) < 1e-4);
    // Directly on probabilities bounded away from 0 and 1.
    const Tensor p = random_probs(3, 27, rng);
    Tensor p5({1, 3, 3, 3, 3}, std::vector<Real>(p.values().begin(), p.values().end()));
    auto g = [&](Tape& t, Var v) { return compute_loss(kind, t, v, q5, cfg); };
    CHECK(grad_check(g, p5, 1e-6) < 1e-4);
  }
}

TEST_CASE("DSF gradient on a random two-class 4^3 prediction") {
  std::mt19937_64 rng(12);
  Tensor logits({1, 2, 4, 4, 4});
  std::uniform_real_distribution<double> u(-2, 2);
  for (auto& v : logits.values()) v = u(rng);
  const Tensor q = random_onehot(2, 64, rng);
  const Tensor q5({1, 2, 4, 4, 4}, std::vector<Real>(q.values().begin(), q.values().end()));
  LossConfig cfg;
  cfg.weights = ClassWeights::uniform(2);
  auto f = [&](Tape& t, Var v) { return dsf(t, softmax_channels(t, v), q5, cfg); };
  CHECK(grad_check(f, logits, 1e-5) < 1e-4);
}

TEST_CASE("loss argument checks") {
  const Tensor q({1, 2, 1, 1, 4});
  Tape t;
  Var p = t.constant(Tensor({1, 3, 1, 1, 4}));
  CHECK_THROWS_AS(dsl(t, p, q, ClassWeights::uniform(2)), std::invalid_argument);
  LossConfig cfg;
  cfg.gamma = -1;
  CHECK_THROWS_AS(cfg.validate(2), std::invalid_argument);
}
