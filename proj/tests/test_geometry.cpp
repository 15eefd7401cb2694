#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "gsum/errors.hpp"
#include "gsum/geometry.hpp"

using namespace gsum;

namespace {

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

std::vector<Eigen::VectorXd> random_symmetric(RandomSource& r, std::size_t n, std::size_t pairs) {
  std::vector<Eigen::VectorXd> pts;
  for (std::size_t i = 0; i < pairs; ++i) {
    Eigen::VectorXd x(n);
    for (auto& c : x) c = r.normal();
    pts.push_back(x);
    pts.push_back(-x);
  }
  return pts;
}

// max over trace-tau PSD Q in 2D of min_s s^T Q s, by grid search.
double brute_force_game(const std::vector<Eigen::VectorXd>& pts, double tau) {
  // Trace-one Q = [[a, b], [b, 1-a]] with b^2 <= a(1-a). The objective is a
  // minimum of linear functions of (a, b), hence concave, so a zooming grid
  // converges to the maximum.
  auto value = [&](double a, double b) {
    double worst = INFINITY;
    for (const auto& s : pts) worst = std::min(worst, tau * (a * s[0] * s[0] + 2 * b * s[0] * s[1] + (1 - a) * s[1] * s[1]));
    return worst;
  };
  double best = -INFINITY, ca = 0.5, cb = 0.0, w = 1.0;
  for (int level = 0; level < 8; ++level) {
    double na = ca, nb = cb;
    for (int i = -100; i <= 100; ++i) {
      const double a = ca + w * i / 100;
      if (a < 0 || a > 1) continue;
      const double bmax = std::sqrt(a * (1 - a));
      for (int j = -100; j <= 100; ++j) {
        const double b = cb + w * j / 100;
        if (std::abs(b) > bmax) continue;
        const double v = value(a, b);
        if (v > best) best = v, na = a, nb = b;
      }
    }
    ca = na, cb = nb, w /= 10;
  }
  return best;
}

}  // namespace

TEST(PointSet, PairsAndRejectsAsymmetric) {
  std::vector<Eigen::VectorXd> pts{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 0), Eigen::Vector2d(-1, 0)};
  const SymmetricPointSet s(pts);
  EXPECT_EQ(s.pairs().size(), 2u);
  const auto mu = s.point_mass({0.5, 0.5});
  EXPECT_DOUBLE_EQ(mu[0] + mu[1] + mu[2], 1.0);
  std::vector<Eigen::VectorXd> bad{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)};
  EXPECT_THROW(SymmetricPointSet{bad}, DomainError);
}

TEST(Game, UnitVectorClosedForm) {
  std::vector<Eigen::VectorXd> pts{Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0)};
  const auto g = ellipsoid_game(SymmetricPointSet(pts), 1.0);
  EXPECT_EQ(g.primal_value, 1.0);
  EXPECT_EQ(g.dual_value, 1.0);
  EXPECT_EQ(g.gap, 0.0);
  EXPECT_EQ(g.q_star.q_matrix(0, 0), 1.0);
  EXPECT_EQ(g.q_star.q_matrix(1, 1), 0.0);
  EXPECT_EQ(g.mu_star[0], 0.5);
}

TEST(Game, RandomSetsCloseTheGap) {
  RandomSource r(21);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + t % 3;
    const auto pts = random_symmetric(r, n, 1 + t % 10);
    const auto g = ellipsoid_game(SymmetricPointSet(pts), 0.8);
    EXPECT_LE(g.primal_value, g.dual_value + 1e-12);
    EXPECT_LE(g.gap, 1e-6) << t;
    EXPECT_TRUE(g.converged);
    EXPECT_NEAR(g.q_star.trace, 0.8, 1e-12);
  }
}

TEST(Game, AgreesWithBruteForceGrid) {
  RandomSource r(22);
  for (int t = 0; t < 4; ++t) {
    const auto pts = random_symmetric(r, 2, 2 + t);
    const auto g = ellipsoid_game(SymmetricPointSet(pts), 1.0);
    const double bf = brute_force_game(pts, 1.0);
    EXPECT_LE(bf, g.dual_value + 1e-9);
    EXPECT_NEAR(g.dual_value, bf, 1e-3);
  }
}

TEST(Intersects, VerdictsAndWitness) {
  std::vector<Eigen::VectorXd> pts{Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0), Eigen::Vector2d(0, 2),
                                   Eigen::Vector2d(0, -2)};
  const SymmetricPointSet s(pts);
  // Cov norm is minimized at mass 4/5 on e1: value 4/5.
  EXPECT_NEAR(min_cov_norm(s).value, 0.8, 1e-7);
  const auto yes = ellipsoid_intersects(s, 1.0);
  EXPECT_EQ(yes.verdict, Verdict::kTrue);
  const auto no = ellipsoid_intersects(s, 2.0);
  ASSERT_EQ(no.verdict, Verdict::kFalse);
  ASSERT_TRUE(no.q.has_value());
  for (const auto& p : pts) EXPECT_GT(p.dot(no.q->q_matrix * p), 1.0);
  EXPECT_EQ(ellipsoid_intersects(s, 1.25).verdict, Verdict::kIndeterminate);
}

TEST(Measure, EllipsoidMonteCarlo) {
  const auto zero = EllipsoidSpec::make(Eigen::MatrixXd::Zero(2, 2));
  EXPECT_EQ(gaussian_measure_ellipsoid(zero, 10000, RandomSource(1)).estimate, 1.0);
  const auto unit = EllipsoidSpec::make(Eigen::MatrixXd::Identity(1, 1));
  const auto m = gaussian_measure_ellipsoid(unit, 200000, RandomSource(2));
  EXPECT_NEAR(m.estimate, std::erf(1 / std::numbers::sqrt2), 4 * m.std_error);
  for (double a : {0.01, 0.05, 0.09}) {
    Eigen::Matrix3d q = Eigen::Vector3d(a, 0.1 - a - 0.005, 0.005).asDiagonal();
    const auto e = gaussian_measure_ellipsoid(EllipsoidSpec::make(q), 100000, RandomSource(3));
    EXPECT_GE(e.estimate, 0.5 - 3 * e.std_error);
  }
  EXPECT_THROW(EllipsoidSpec::make(-Eigen::MatrixXd::Identity(2, 2)), DomainError);
  EXPECT_THROW(gaussian_measure_ellipsoid(unit, 10, RandomSource(2)), DomainError);
}

TEST(Steinhaus, HalfLineAndSymmetricInterval) {
  double lo = 0, hi = 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (phi_cdf(mid) < 2.0 / 3.0 ? lo : hi) = mid;
  }
  const double q = 0.5 * (lo + hi);
  EXPECT_NEAR(steinhaus_interval({{-INFINITY, q}}), 2 * q, 1e-9);
  EXPECT_NEAR(2 * q, 0.86146, 1e-5);
  EXPECT_NEAR(steinhaus_interval({{-1.5, -0.2}, {-0.3, 1.5}}), 3.0, 1e-15);
  EXPECT_THROW(steinhaus_interval({{0.0, 1.0}}), DomainError);
  const auto merged = merge_intervals({{2, 3}, {0, 1}, {1, 1.5}});
  ASSERT_EQ(merged.size(), 2u);
  EXPECT_EQ(merged[0].hi, 1.5);
  const auto sum = minkowski_sum({{0, 1}}, {{10, 11}, {20, 21}});
  ASSERT_EQ(sum.size(), 2u);
  EXPECT_EQ(sum[1].lo, 20.0);
}

TEST(Neighborhood, HalfSpaceBoundAndClosedForm) {
  for (double d : {1.0, 2.0, 3.0}) {
    HalfSpace h{Eigen::Vector3d(0, 0.6, 0.8), 0.0};
    const auto rep = neighborhood_measure_check(h, d, 100000, RandomSource(4));
    ASSERT_TRUE(rep.closed_form.has_value());
    EXPECT_NEAR(*rep.closed_form, phi_cdf(d), 1e-15);
    EXPECT_NEAR(rep.estimate, *rep.closed_form, 4 * rep.std_error + 1e-12);
    EXPECT_TRUE(rep.passes());
  }
  EXPECT_THROW(neighborhood_measure_check(HalfSpace{Eigen::Vector2d(1, 0), 1.0}, 1.0, 1000, RandomSource(4)),
               DomainError);  // measure below 1/2
}

TEST(Neighborhood, GridSetMeasure) {
  GridSet g{Eigen::Vector2d(-3, -3), 1.0, {}};
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) g.cells.push_back(Eigen::Vector2i(i, j));
  }
  const auto rep = neighborhood_measure_check(g, 1.0, 20000, RandomSource(5));
  const double side = phi_cdf(3) - phi_cdf(-3);
  EXPECT_NEAR(rep.set_measure, side * side, 1e-14);
  EXPECT_TRUE(rep.passes());
  g.cells.push_back(Eigen::Vector2i(0, 0));
  EXPECT_THROW(neighborhood_measure_check(g, 1.0, 20000, RandomSource(5)), DomainError);
}
