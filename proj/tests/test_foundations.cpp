#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "gsum/errors.hpp"
#include "gsum/numerics.hpp"
#include "gsum/parallel.hpp"
#include "gsum/prob.hpp"
#include "gsum/random.hpp"
#include "gsum/transport.hpp"

using namespace gsum;

namespace {

// Independent oracles.
double phi_oracle(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double quantile_oracle(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (phi_oracle(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(RandomSource, SameSeedSameStream) {
  RandomSource a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(RandomSource, SplitIsPureAndDistinct) {
  RandomSource base(7);
  RandomSource s1 = base.split(3), s2 = base.split(3), s3 = base.split(4);
  base();  // advancing the parent does not change its splits
  RandomSource s4 = base.split(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 50; ++i) {
    const auto v = s1();
    EXPECT_EQ(v, s2());
    EXPECT_EQ(v, s4());
    seen.insert(v);
    seen.insert(s3());
  }
  EXPECT_EQ(seen.size(), 100u);
}

TEST(RandomSource, UniformInOpenInterval) {
  RandomSource r(1);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / 100000, 0.5, 4 * std::sqrt(1.0 / 12 / 100000));
}

TEST(RandomSource, NormalMoments) {
  RandomSource r(2);
  const int n = 400000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_NEAR(m1, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(m2, 1.0, 4 * std::sqrt(2.0 / n));
  EXPECT_NEAR(m4, 3.0, 4 * std::sqrt(96.0 / n));
}

TEST(Parallel, ShardResultsIndependentOfThreads) {
  auto run = [](std::size_t threads) {
    std::vector<double> out(37);
    parallel_shards(out.size(), threads, [&](std::size_t k) {
      RandomSource r = RandomSource(5).split(k);
      out[k] = r.normal();
    });
    return out;
  };
  EXPECT_EQ(run(1), run(4));
}

TEST(Normal, CdfMatchesErfcOracle) {
  for (double x = -30.0; x <= 8.0; x += 0.37) {
    const double want = phi_oracle(x);
    EXPECT_NEAR(std_normal_cdf(x), want, 1e-15 + 1e-13 * want) << x;
    EXPECT_NEAR(std_normal_sf(-x), want, 1e-15 + 1e-13 * want) << x;
  }
  EXPECT_NEAR(std_normal_cdf(-2.0), 0.022750131948179, 1e-14);
  EXPECT_NEAR(std_normal_pdf(0.0), 1.0 / std::sqrt(2 * std::numbers::pi), 1e-16);
}

TEST(Normal, QuantileMatchesBisectionOracle) {
  for (double p : {1e-12, 1e-6, 0.01, 0.25, 0.5, 2.0 / 3.0, 0.9, 0.999999}) {
    EXPECT_NEAR(std_normal_quantile(p), quantile_oracle(p), 1e-9) << p;
  }
  EXPECT_NEAR(std_normal_quantile(0.25), -0.6744897501960817, 1e-12);
  EXPECT_THROW(std_normal_quantile(0.0), DomainError);
  EXPECT_THROW(std_normal_quantile(1.0), DomainError);
}

TEST(Distribution1D, Canonicalizes) {
  DiscreteDistribution1D d({{0.5, 0.25}, {-1.0, 0.5}, {0.5, 0.25}, {3.0, 0.0}});
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.atoms()[0].x, -1.0);
  EXPECT_DOUBLE_EQ(d.atoms()[1].p, 0.5);
  EXPECT_DOUBLE_EQ(d.mean(), -0.25);
  EXPECT_DOUBLE_EQ(d.variance(), 0.5625);
  EXPECT_DOUBLE_EQ(d.cdf(-1.0), 0.5);
  EXPECT_DOUBLE_EQ(d.cdf(-1.5), 0.0);
  EXPECT_THROW(DiscreteDistribution1D({{0.0, 0.7}}), DomainError);
  EXPECT_THROW(DiscreteDistribution1D({{0.0, -0.1}, {1.0, 1.1}}), DomainError);
  EXPECT_THROW(DiscreteDistribution1D(std::vector<Atom>{}), DomainError);
}

TEST(Subgaussian, SymmetricTwoPointClosedForm) {
  const double pts[] = {-0.05, 0.05};
  const auto d = DiscreteDistribution1D::uniform(pts);
  // P[|X| >= t] = 1 up to t = a, so kappa = a / sqrt(2 ln 2).
  const auto c = subgaussian_norm(d);
  EXPECT_NEAR(c.kappa, 0.05 / std::sqrt(2 * std::log(2.0)), 1e-12);
  std::vector<double> grid;
  for (int i = 1; i < 1000; ++i) grid.push_back(i * 1e-3);
  grid.push_back(0.05);
  EXPECT_TRUE(subgaussian_tail_holds(d, c.kappa, grid));
  EXPECT_FALSE(subgaussian_tail_holds(d, 0.99 * c.kappa, grid));
  EXPECT_EQ(subgaussian_norm(DiscreteDistribution1D::point_mass(0.0)).kappa, 0.0);
}

TEST(Distances, KsAgainstBruteForce) {
  RandomSource r(3);
  std::vector<double> v(500);
  for (auto& x : v) x = r.normal();
  std::sort(v.begin(), v.end());
  double want = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = phi_oracle(v[i]);
    want = std::max({want, std::abs(f - double(i) / v.size()), std::abs(f - double(i + 1) / v.size())});
  }
  EXPECT_NEAR(ks_distance(v, phi_oracle), want, 1e-15);
  std::vector<double> unsorted{1.0, 0.0};
  EXPECT_THROW(ks_distance(unsorted, phi_oracle), DomainError);
}

TEST(Distances, Wasserstein1AndTv) {
  const double a[] = {0.0}, b[] = {-1.0, 1.0};
  EXPECT_NEAR(wasserstein1_1d(DiscreteDistribution1D::uniform(a), DiscreteDistribution1D::uniform(b)), 1.0, 1e-15);
  const auto d = DiscreteDistribution1D::uniform(b);
  std::vector<double> draws{-1.0, -1.0, -1.0, 1.0};
  EXPECT_NEAR(total_variation_to_atoms(draws, d), 0.25, 1e-15);
}

TEST(Numerics, GaussHermiteMoments) {
  const GaussHermite gh(32);
  double wsum = 0;
  for (double w : gh.weights()) wsum += w;
  EXPECT_NEAR(wsum, 1.0, 1e-14);
  EXPECT_NEAR(gh.expectation([](double z) { return z * z * z * z; }), 3.0, 1e-12);
  EXPECT_NEAR(gh.expectation([](double z) { return std::cos(z); }), std::exp(-0.5), 1e-14);
}

TEST(Numerics, IntegrateRootAndNorm) {
  EXPECT_NEAR(integrate([](double x) { return std::exp(-x * x / 2); }, -INFINITY, INFINITY),
              std::sqrt(2 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(find_root([](double x) { return x * x - 2; }, 0.0, 2.0), std::numbers::sqrt2, 1e-13);
  Eigen::MatrixXd a(3, 2);
  a << 1, 2, 3, 4, 5, 6;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  EXPECT_NEAR(operator_norm(a), svd.singularValues()(0), 1e-8);
}

TEST(Transport, AffineAndTabulated) {
  const auto id = TransportMap1D::affine(2.0, 1.0);
  EXPECT_DOUBLE_EQ(id(3.0), 7.0);
  EXPECT_DOUBLE_EQ(id.slope(-5.0), 2.0);
  EXPECT_DOUBLE_EQ(id.mean_under_gamma(), 1.0);
  const auto th = TransportMap1D::tabulate([](double x) { return std::tanh(x); }, -9.0, 9.0, 9217);
  EXPECT_NEAR(th(0.3), std::tanh(0.3), 1e-5);
  EXPECT_NEAR(th.mean_under_gamma(), 0.0, 1e-15);
  EXPECT_LE(th.max_slope(), 1.0);
  EXPECT_THROW(th.with_certificate(0.5), DomainError);
  EXPECT_THROW(TransportMap1D::tabulated({0.0, 1.0}, {1.0, 0.0}), DomainError);
  // E[exp(Z)] = exp(1/2).
  const auto ex = TransportMap1D::tabulate([](double x) { return std::exp(x); }, -9.0, 9.0, 20001);
  EXPECT_NEAR(ex.mean_under_gamma(), std::exp(0.5), 1e-5);
}
