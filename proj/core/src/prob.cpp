#include "gsum/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "gsum/errors.hpp"

namespace gsum {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684758586311649;
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kMassTolerance = 1e-12;
}  // namespace

double std_normal_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double std_normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / kSqrt2); }

double std_normal_sf(double x) noexcept { return 0.5 * std::erfc(x / kSqrt2); }

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("std_normal_quantile: p must lie in (0,1), got " + std::to_string(p));
  }
  if (p == 0.5) return 0.0;
  // erfc_inv keeps relative accuracy in both tails.
  return p < 0.5 ? -kSqrt2 * boost::math::erfc_inv(2.0 * p)
                 : kSqrt2 * boost::math::erfc_inv(2.0 * (1.0 - p));
}

// ---------------------------------------------------------------------------

DiscreteDistribution1D::DiscreteDistribution1D(std::vector<Atom> atoms) {
  if (atoms.empty()) throw DomainError("distribution has no atoms");
  for (const auto& a : atoms) {
    if (!std::isfinite(a.x) || !std::isfinite(a.p) || a.p < 0.0) {
      throw DomainError("distribution atoms must be finite with nonnegative mass");
    }
  }
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom& a, const Atom& b) { return a.x < b.x; });
  double total = 0.0;
  for (const auto& a : atoms) {
    total += a.p;
    if (a.p == 0.0) continue;
    if (!atoms_.empty() && atoms_.back().x == a.x) {
      atoms_.back().p += a.p;
    } else {
      atoms_.push_back(a);
    }
  }
  if (atoms_.empty() || std::abs(total - 1.0) > kMassTolerance) {
    throw DomainError("distribution masses sum to " + std::to_string(total) + ", expected 1");
  }
}

DiscreteDistribution1D DiscreteDistribution1D::point_mass(double x) {
  return DiscreteDistribution1D({{x, 1.0}});
}

DiscreteDistribution1D DiscreteDistribution1D::uniform(std::span<const double> points) {
  if (points.empty()) throw DomainError("uniform distribution needs at least one point");
  std::vector<Atom> atoms;
  atoms.reserve(points.size());
  const double w = 1.0 / static_cast<double>(points.size());
  for (double x : points) atoms.push_back({x, w});
  return DiscreteDistribution1D(std::move(atoms));
}

double DiscreteDistribution1D::mean() const noexcept {
  double m = 0.0;
  for (const auto& a : atoms_) m += a.p * a.x;
  return m;
}

double DiscreteDistribution1D::variance() const noexcept {
  const double m = mean();
  double v = 0.0;
  for (const auto& a : atoms_) v += a.p * (a.x - m) * (a.x - m);
  return v;
}

double DiscreteDistribution1D::cdf(double x) const noexcept {
  double c = 0.0;
  for (const auto& a : atoms_) {
    if (a.x > x) break;
    c += a.p;
  }
  return std::min(c, 1.0);
}

DiscreteDistribution1D DiscreteDistribution1D::scaled(double c) const {
  if (c == 0.0 || !std::isfinite(c)) throw DomainError("scale factor must be finite and nonzero");
  std::vector<Atom> out = atoms_;
  for (auto& a : out) a.x *= c;
  return DiscreteDistribution1D(std::move(out));
}

// ---------------------------------------------------------------------------

DiscreteDistributionVec::DiscreteDistributionVec(std::size_t dim, std::vector<AtomVec> atoms)
    : dim_(dim) {
  if (dim == 0) throw DomainError("vector distribution dimension must be positive");
  if (atoms.empty()) throw DomainError("vector distribution has no atoms");
  double total = 0.0;
  for (auto& a : atoms) {
    if (static_cast<std::size_t>(a.x.size()) != dim) {
      throw DomainError("atom dimension " + std::to_string(a.x.size()) +
                        " does not match declared dimension " + std::to_string(dim));
    }
    if (!std::isfinite(a.p) || a.p < 0.0 || !a.x.allFinite()) {
      throw DomainError("vector atoms must be finite with nonnegative mass");
    }
    total += a.p;
    if (a.p > 0.0) atoms_.push_back(std::move(a));
  }
  if (atoms_.empty() || std::abs(total - 1.0) > kMassTolerance) {
    throw DomainError("vector distribution masses sum to " + std::to_string(total));
  }
}

Eigen::VectorXd DiscreteDistributionVec::mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  for (const auto& a : atoms_) m += a.p * a.x;
  return m;
}

Eigen::MatrixXd DiscreteDistributionVec::covariance() const {
  const Eigen::VectorXd m = mean();
  const auto n = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (const auto& a : atoms_) {
    const Eigen::VectorXd d = a.x - m;
    c.noalias() += a.p * d * d.transpose();
  }
  return c;
}

DiscreteDistribution1D DiscreteDistributionVec::project(const Eigen::VectorXd& v) const {
  std::vector<Atom> out;
  out.reserve(atoms_.size());
  for (const auto& a : atoms_) out.push_back({a.x.dot(v), a.p});
  return DiscreteDistribution1D(std::move(out));
}

// ---------------------------------------------------------------------------

SubgaussianCertificate subgaussian_norm(const DiscreteDistribution1D& dist) {
  std::vector<Atom> mags;
  mags.reserve(dist.size());
  for (const auto& a : dist.atoms()) mags.push_back({std::abs(a.x), a.p});
  std::sort(mags.begin(), mags.end(), [](const Atom& a, const Atom& b) { return a.x > b.x; });

  SubgaussianCertificate cert;
  cert.direction = Eigen::VectorXd::Ones(1);
  double tail = 0.0;
  for (std::size_t i = 0; i < mags.size();) {
    const double m = mags[i].x;
    while (i < mags.size() && mags[i].x == m) tail += mags[i++].p;
    if (m == 0.0) break;
    // tail(t) = P[|X| >= t] is constant on (m_next, m]; the bound is tightest at t = m.
    const double k = m / std::sqrt(2.0 * std::log(2.0 / std::min(tail, 1.0)));
    if (k > cert.kappa) {
      cert.kappa = k;
      cert.worst_t = m;
    }
  }
  return cert;
}

SubgaussianCertificate subgaussian_norm(const DiscreteDistributionVec& dist,
                                        std::span<const Eigen::VectorXd> directions) {
  if (directions.empty()) throw DomainError("subgaussian_norm: direction grid is empty");
  SubgaussianCertificate best;
  best.direction = directions.front();
  for (const auto& v : directions) {
    if (static_cast<std::size_t>(v.size()) != dist.dim()) {
      throw DomainError("subgaussian_norm: direction has wrong dimension");
    }
    const double norm = v.norm();
    if (std::abs(norm - 1.0) > 1e-9) throw DomainError("subgaussian_norm: direction is not a unit vector");
    auto c = subgaussian_norm(dist.project(v));
    if (c.kappa > best.kappa) {
      best.kappa = c.kappa;
      best.worst_t = c.worst_t;
      best.direction = v;
    }
  }
  return best;
}

bool subgaussian_tail_holds(const DiscreteDistribution1D& dist, double kappa,
                            std::span<const double> grid) {
  for (double t : grid) {
    if (t <= 0.0) continue;
    double tail = 0.0;
    for (const auto& a : dist.atoms()) {
      if (std::abs(a.x) >= t) tail += a.p;
    }
    const double bound = kappa > 0.0 ? 2.0 * std::exp(-t * t / (2.0 * kappa * kappa)) : 0.0;
    if (tail > bound + 1e-12) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

double ks_distance(std::span<const double> sorted_sample,
                   const std::function<double(double)>& cdf) {
  if (sorted_sample.empty()) throw DomainError("ks_distance: empty sample");
  const auto n = static_cast<double>(sorted_sample.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sorted_sample.size()) {
    const double x = sorted_sample[i];
    std::size_t j = i;
    while (j < sorted_sample.size() && sorted_sample[j] == x) ++j;
    if (j < sorted_sample.size() && sorted_sample[j] < x) {
      throw DomainError("ks_distance: sample is not sorted");
    }
    const double f = cdf(x);
    d = std::max({d, std::abs(static_cast<double>(i) / n - f),
                  std::abs(static_cast<double>(j) / n - f)});
    i = j;
  }
  return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double wasserstein1_1d(const DiscreteDistribution1D& a, const DiscreteDistribution1D& b) {
  std::vector<double> xs;
  for (const auto& t : a.atoms()) xs.push_back(t.x);
  for (const auto& t : b.atoms()) xs.push_back(t.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double w = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    w += std::abs(a.cdf(xs[k]) - b.cdf(xs[k])) * (xs[k + 1] - xs[k]);
  }
  return w;
}

double total_variation_to_atoms(std::span<const double> draws,
                                const DiscreteDistribution1D& dist) {
  const auto& atoms = dist.atoms();
  std::vector<double> counts(atoms.size(), 0.0);
  double unmatched = 0.0;
  for (double v : draws) {
    auto it = std::lower_bound(atoms.begin(), atoms.end(), v - 1e-12,
                               [](const Atom& a, double x) { return a.x < x; });
    if (it != atoms.end() && std::abs(it->x - v) <= 1e-12) {
      counts[static_cast<std::size_t>(it - atoms.begin())] += 1.0;
    } else {
      unmatched += 1.0;
    }
  }
  const auto n = static_cast<double>(draws.size());
  double tv = unmatched / n;
  for (std::size_t k = 0; k < atoms.size(); ++k) tv += std::abs(counts[k] / n - atoms[k].p);
  return 0.5 * tv;
}

}  // namespace gsum
