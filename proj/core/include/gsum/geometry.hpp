#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsum/random.hpp"

namespace gsum {

/// The ellipsoid {x : x^T Q x <= 1}.
struct EllipsoidSpec {
  Eigen::MatrixXd q_matrix;
  double trace = 0.0;

  /// Throws DomainError unless q is square, symmetric within 1e-12 and has
  /// eigenvalues >= -1e-12.
  static EllipsoidSpec make(const Eigen::MatrixXd& q);
};

/// Finite set closed under x -> -x, stored as antipodal pairs. A point at the
/// origin forms its own pair.
class SymmetricPointSet {
 public:
  /// Throws DomainError when the points are empty, of mixed dimension, or
  /// some point has no negative partner within 1e-12.
  explicit SymmetricPointSet(std::vector<Eigen::VectorXd> points);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const std::vector<Eigen::VectorXd>& points() const noexcept { return points_; }
  /// Representative s of each pair {s, -s}.
  [[nodiscard]] const std::vector<Eigen::VectorXd>& pairs() const noexcept { return reps_; }
  /// Indices into points() of the two members of each pair (equal for 0).
  [[nodiscard]] const std::vector<std::pair<std::size_t, std::size_t>>& pair_members() const noexcept {
    return members_;
  }
  /// Per-point mass from per-pair mass, split evenly between s and -s.
  [[nodiscard]] std::vector<double> point_mass(const std::vector<double>& pair_mass) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Eigen::VectorXd> points_;
  std::vector<Eigen::VectorXd> reps_;
  std::vector<std::pair<std::size_t, std::size_t>> members_;
};

struct MinCovNorm {
  std::vector<double> mu;  ///< over points(), symmetric
  std::vector<double> pair_mass;
  double value;            ///< |Cov(mu)|
  /// Lower bound on the optimum from the dual certificate.
  double lower_bound;
};

struct GameOptions {
  double tolerance = 1e-6;
  int max_iterations = 100000;
};

/// min over symmetric probability measures on S of |Cov(mu)|.
MinCovNorm min_cov_norm(const SymmetricPointSet& s, const GameOptions& options = {});

struct GameSolution {
  EllipsoidSpec q_star;
  std::vector<double> mu_star;
  double primal_value;  ///< min_s s^T Q* s, Q* of trace tau
  double dual_value;    ///< tau |Cov(mu*)|
  double gap;
  bool converged;
};

/// Both sides of max_{Q >= 0, tr Q = tau} min_s s^T Q s = tau min_mu |Cov mu|.
/// Throws DomainError for tau <= 0 and InternalError if weak duality fails.
GameSolution ellipsoid_game(const SymmetricPointSet& s, double tau, const GameOptions& options = {});

enum class Verdict { kTrue, kFalse, kIndeterminate };
const char* to_string(Verdict v) noexcept;

struct IntersectionCertificate {
  Verdict verdict;
  double min_cov_norm;
  double threshold;  ///< 1 / tau
  /// Measure on S with tau |Cov mu| <= 1 (verdict true).
  std::vector<double> mu;
  /// Trace-tau ellipsoid missing S (verdict false).
  std::optional<EllipsoidSpec> q;
  double q_min_value = 0.0;  ///< min_s s^T Q s for the witness
};

/// Whether every trace-tau ellipsoid meets S, decided by min_cov_norm <= 1/tau;
/// within 10 * tolerance of the threshold the verdict is indeterminate.
IntersectionCertificate ellipsoid_intersects(const SymmetricPointSet& s, double tau,
                                             const GameOptions& options = {});

struct MeasureEstimate {
  double estimate;
  double std_error;
  std::size_t nsamples;
};

/// Monte Carlo gamma_n({x^T Q x <= 1}). Throws DomainError when
/// nsamples < 10^4.
MeasureEstimate gaussian_measure_ellipsoid(const EllipsoidSpec& e, std::size_t nsamples,
                                           const RandomSource& rng, std::size_t threads = 1);

struct Interval {
  double lo;
  double hi;
};

/// Merges overlapping or touching closed intervals.
std::vector<Interval> merge_intervals(std::vector<Interval> a);
double gaussian_measure(const std::vector<Interval>& a);
/// A + A as merged intervals.
std::vector<Interval> minkowski_sum(const std::vector<Interval>& a, const std::vector<Interval>& b);

/// Largest delta with [-delta, delta] inside A + A (infinity when A + A is
/// the line). Throws DomainError when gamma_1(A) < 2/3.
double steinhaus_interval(const std::vector<Interval>& a);

/// {x : <u, x> >= b}, u a unit vector.
struct HalfSpace {
  Eigen::VectorXd u;
  double b;
};

/// Union of cells of a regular axis-aligned grid.
struct GridSet {
  Eigen::VectorXd origin;
  double cell = 1.0;
  std::vector<Eigen::VectorXi> cells;
};

struct NeighborhoodReport {
  double d;
  double set_measure;  ///< gamma_n(S), exact
  double estimate;     ///< gamma_n(S + B(0, D))
  double std_error;
  double bound;        ///< 1 - 2 exp(-D^2 / 2)
  std::optional<double> closed_form;
  [[nodiscard]] bool passes() const noexcept { return estimate >= bound - 3.0 * std_error; }
};

/// Throws DomainError when gamma_n(S) < 1/2 or D < 0.
NeighborhoodReport neighborhood_measure_check(const HalfSpace& s, double d, std::size_t nsamples,
                                              const RandomSource& rng, std::size_t threads = 1);
NeighborhoodReport neighborhood_measure_check(const GridSet& s, double d, std::size_t nsamples,
                                              const RandomSource& rng, std::size_t threads = 1);

}  // namespace gsum
