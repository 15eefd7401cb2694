#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gsum {

// ---------------------------------------------------------------------------
// Standard normal

double std_normal_pdf(double x) noexcept;

/// Phi(x), computed from erfc so that both tails keep relative accuracy.
double std_normal_cdf(double x) noexcept;

/// 1 - Phi(x) without cancellation.
double std_normal_sf(double x) noexcept;

/// Inverse of Phi. Throws DomainError unless 0 < p < 1.
double std_normal_quantile(double p);

// ---------------------------------------------------------------------------
// Finite distributions

struct Atom {
  double x;
  double p;
};

/// Finitely supported law on the real line in canonical form: atoms sorted
/// strictly increasing, duplicates merged, zero-mass atoms dropped, masses
/// summing to one within 1e-12.
class DiscreteDistribution1D {
 public:
  /// Canonicalizes `atoms`. Throws DomainError on negative or non-finite
  /// entries, on an empty list, or when the masses do not sum to one.
  explicit DiscreteDistribution1D(std::vector<Atom> atoms);

  static DiscreteDistribution1D point_mass(double x);
  /// Uniform law on the given points (duplicates accumulate mass).
  static DiscreteDistribution1D uniform(std::span<const double> points);

  [[nodiscard]] const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  [[nodiscard]] std::size_t size() const noexcept { return atoms_.size(); }
  [[nodiscard]] double mean() const noexcept;
  [[nodiscard]] double variance() const noexcept;
  /// P[X <= x].
  [[nodiscard]] double cdf(double x) const noexcept;
  /// Law of c*X; c must be nonzero.
  [[nodiscard]] DiscreteDistribution1D scaled(double c) const;

 private:
  std::vector<Atom> atoms_;
};

struct AtomVec {
  Eigen::VectorXd x;
  double p;
};

/// Finitely supported law on R^n. Atoms keep input order; masses sum to one.
class DiscreteDistributionVec {
 public:
  DiscreteDistributionVec(std::size_t dim, std::vector<AtomVec> atoms);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const std::vector<AtomVec>& atoms() const noexcept { return atoms_; }
  [[nodiscard]] Eigen::VectorXd mean() const;
  /// Centered second moment.
  [[nodiscard]] Eigen::MatrixXd covariance() const;
  /// Law of <X, v>.
  [[nodiscard]] DiscreteDistribution1D project(const Eigen::VectorXd& v) const;

 private:
  std::size_t dim_;
  std::vector<AtomVec> atoms_;
};

// ---------------------------------------------------------------------------
// Subgaussian norm

struct SubgaussianCertificate {
  double kappa = 0.0;
  /// Threshold t at which P[|<Y,v>| >= t] = 2 exp(-t^2 / (2 kappa^2)).
  double worst_t = 0.0;
  /// Audited direction attaining kappa (length 1 for scalar inputs).
  Eigen::VectorXd direction;
};

/// Smallest kappa with P[|X| >= t] <= 2 exp(-t^2/(2 kappa^2)) for all t > 0.
/// Exact: the tail is a step function, so only the atom magnitudes matter.
SubgaussianCertificate subgaussian_norm(const DiscreteDistribution1D& dist);

/// Maximum of the scalar norm over the audited unit directions.
/// Throws DomainError when `directions` is empty or has the wrong dimension.
SubgaussianCertificate subgaussian_norm(const DiscreteDistributionVec& dist,
                                        std::span<const Eigen::VectorXd> directions);

/// True when P[|X| >= t] <= 2 exp(-t^2/(2 kappa^2)) at every t in `grid`
/// (slack 1e-12).
bool subgaussian_tail_holds(const DiscreteDistribution1D& dist, double kappa,
                            std::span<const double> grid);

// ---------------------------------------------------------------------------
// Distances

/// Kolmogorov-Smirnov statistic of a sorted sample against a CDF.
/// Throws DomainError on an empty or unsorted sample.
double ks_distance(std::span<const double> sorted_sample,
                   const std::function<double(double)>& cdf);

/// Two-sample KS statistic; both inputs sorted.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Closed form W1 = integral of |F_a - F_b|.
double wasserstein1_1d(const DiscreteDistribution1D& a, const DiscreteDistribution1D& b);

/// Sum over atoms of |empirical frequency - p| / 2 for draws from the atoms
/// of `dist`; draws must be atom values (matched within 1e-12).
double total_variation_to_atoms(std::span<const double> draws,
                                const DiscreteDistribution1D& dist);

}  // namespace gsum
