#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "gsum/errors.hpp"
#include "gsum/highdim.hpp"

using namespace gsum;

namespace {

double norm_oracle(const std::vector<Eigen::VectorXd>& v, const std::vector<std::size_t>& part) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(v[0].size(), v[0].size());
  for (auto i : part) m += v[i] * v[i].transpose();
  m /= double(part.size());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().maxCoeff();
}

std::vector<Eigen::VectorXd> random_admissible(RandomSource& r, std::size_t m, std::size_t n, std::size_t k) {
  while (true) {
    std::vector<Eigen::VectorXd> v;
    for (std::size_t i = 0; i < m; ++i) {
      Eigen::VectorXd x(n);
      for (auto& c : x) c = r.normal();
      v.push_back(x / x.norm() * (0.3 + 0.6 * r.uniform()));
    }
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (const auto& x : v) cov += x * x.transpose() / double(m);
    if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).eigenvalues().maxCoeff() < 1.0 / k) return v;
  }
}

}  // namespace

TEST(Simplex, VectorsAreCenteredAndEquiangular) {
  for (std::size_t d : {2u, 3u, 8u}) {
    const auto s = simplex_vectors(d);
    ASSERT_EQ(s.vectors.size(), d);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d - 1);
    const double ld = std::log(double(d));
    for (std::size_t i = 0; i < d; ++i) {
      sum += s.vectors[i];
      EXPECT_NEAR(s.vectors[i].squaredNorm(), ld * (1.0 - 1.0 / d), 1e-12);
      for (std::size_t j = i + 1; j < d; ++j) EXPECT_NEAR(s.vectors[i].dot(s.vectors[j]), -ld / d, 1e-12);
    }
    EXPECT_LE(sum.norm(), 1e-12);
  }
  EXPECT_THROW(simplex_vectors(1), DomainError);
}

TEST(Simplex, RegionTiesGoToLowestIndex) {
  const auto s = simplex_vectors(3);
  EXPECT_EQ(region_index(Eigen::VectorXd::Zero(2), s), 0u);
  EXPECT_EQ(region_index(s.vectors[2], s), 2u);
}

TEST(Simplex, FamilywiseCriticalValue) {
  EXPECT_NEAR(familywise_z(1), 3.0, 1e-9);
  EXPECT_GT(familywise_z(64), familywise_z(8));
}

TEST(Bessel, TwoDimensionalClosedForm) {
  // d = 2: E[G | G > 0] / |v| with |v| = sqrt(log 2 / 2).
  const double closed = std::sqrt(2.0 / std::numbers::pi) / std::sqrt(std::log(2.0) / 2.0);
  EXPECT_NEAR(closed, 1.35532, 1e-5);
  const auto est = estimate_cd(simplex_vectors(2), 200000, RandomSource(3));
  EXPECT_LE(std::abs(est.c_d - closed), 3 * est.std_error);
  EXPECT_LE(est.region_max_z, est.critical_z);
}

TEST(Bessel, IdentityCheckOnFourVertices) {
  auto s = simplex_vectors(4);
  const auto est = estimate_cd(s, 100000, RandomSource(4));
  EXPECT_GT(est.c_d, 0.1);
  EXPECT_LT(est.c_d, 10.0);
  EXPECT_LE(est.orthogonal_max_z, est.critical_z);
  s.c_d = est.c_d;
  s.c_d_stderr = est.std_error;
  const auto b = bessel_identity_check(s, 100000, RandomSource(5));
  EXPECT_TRUE(b.vertices_uniform());
  EXPECT_TRUE(b.residual_centered());
  EXPECT_THROW(bessel_identity_check(simplex_vectors(4), 100000, RandomSource(5)), DomainError);
  EXPECT_THROW(estimate_cd(s, 100, RandomSource(5)), DomainError);
}

TEST(Partition, ExhaustiveMatchesBruteForce) {
  RandomSource r(11);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t m = 6, k = 2, parts = m / k;
    const auto v = random_admissible(r, m, 2, k);
    double best = INFINITY;
    std::vector<std::size_t> label(m, 0);
    for (std::size_t code = 0; code < 729; ++code) {  // 3^6 labelings
      std::size_t c = code;
      std::vector<std::vector<std::size_t>> p(parts);
      for (std::size_t i = 0; i < m; ++i, c /= 3) p[c % 3].push_back(i);
      if (std::any_of(p.begin(), p.end(), [](const auto& q) { return q.empty(); })) continue;
      double worst = 0.0;
      for (const auto& q : p) worst = std::max(worst, norm_oracle(v, q));
      best = std::min(best, worst);
    }
    const auto res = mss_partition(v, k);
    ASSERT_EQ(res.parts.size(), parts);
    const double got = *std::max_element(res.per_part_norm.begin(), res.per_part_norm.end());
    EXPECT_NEAR(got, best, 1e-12);
    EXPECT_TRUE(res.certified);
    for (std::size_t j = 0; j < parts; ++j) EXPECT_NEAR(res.per_part_norm[j], norm_oracle(v, res.parts[j]), 1e-12);
    EXPECT_TRUE(verify_partition(v, res));
    auto tampered = res;
    tampered.per_part_norm[0] = std::nextafter(tampered.per_part_norm[0], 1.0);
    EXPECT_FALSE(verify_partition(v, tampered));
  }
}

TEST(Partition, RandomizedCertifiesLargerInstance) {
  RandomSource r(12);
  const auto v = random_admissible(r, 24, 3, 3);
  PartitionOptions opt;
  opt.strategy = SearchStrategy::kRandomized;
  opt.seed = 9;
  const auto res = mss_partition(v, 3, opt);
  EXPECT_TRUE(res.certified);
  EXPECT_EQ(res.parts.size(), 8u);
  EXPECT_TRUE(verify_partition(v, res));
}

TEST(Partition, Preconditions) {
  std::vector<Eigen::VectorXd> one{Eigen::VectorXd::Constant(2, 0.1)};
  EXPECT_THROW(mss_partition(one, 2), DomainError);
  std::vector<Eigen::VectorXd> big(4, Eigen::VectorXd::Constant(2, 0.9));
  EXPECT_THROW(mss_partition(big, 2), DomainError);  // |v| > 1
  std::vector<Eigen::VectorXd> aligned(4, Eigen::Vector2d(0.9, 0.0));
  EXPECT_THROW(mss_partition(aligned, 2), DomainError);  // covariance above I/k
  EXPECT_THROW(parse_strategy("greedy"), DomainError);
}

TEST(Factorize, CrossDistribution) {
  std::vector<AtomVec> atoms;
  for (auto x : {Eigen::Vector2d(0.5, 0), Eigen::Vector2d(-0.5, 0), Eigen::Vector2d(0, 0.5), Eigen::Vector2d(0, -0.5)}) {
    atoms.push_back({x, 0.25});
  }
  const DiscreteDistributionVec x(2, atoms);
  const auto plan = normcov_factorize(x, 1.5);
  EXPECT_EQ(plan.k, static_cast<std::size_t>(std::floor(std::exp(2.25))));
  EXPECT_TRUE(plan.certified);
  for (std::size_t j = 0; j < plan.raw_columns.size(); ++j) {
    EXPECT_LE(plan.operator_norms[j], plan.c0);
    const Eigen::VectorXd e = Eigen::VectorXd::Ones(plan.raw_columns[j].cols());
    EXPECT_LE((plan.apply(j, e) - plan.map(j) * e).norm(), 1e-12);
  }
  EXPECT_THROW(normcov_factorize(x, 0.5), DomainError);
  std::vector<AtomVec> wide{{Eigen::Vector2d(1.4, 0), 0.5}, {Eigen::Vector2d(-1.4, 0), 0.5}};
  EXPECT_THROW(normcov_factorize(DiscreteDistributionVec(2, wide), 1.5), DomainError);  // covariance gate
}
