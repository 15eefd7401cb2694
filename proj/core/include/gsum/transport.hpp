#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace gsum {

/// Monotone map of the real line, stored as a piecewise-linear interpolant
/// (linear extrapolation beyond the knots) or as an exact affine map.
///
/// Invariants: values nondecreasing; every segment slope is at most
/// lipschitz_certificate(); mean_under_gamma() is E[F(Z)], Z ~ N(0,1),
/// integrated in closed form segment by segment.
class TransportMap1D {
 public:
  /// Throws DomainError unless knots are strictly increasing, sizes match,
  /// there are at least two knots and values are nondecreasing.
  static TransportMap1D tabulated(std::vector<double> knots, std::vector<double> values);

  /// Samples `f` on `count` equispaced knots of [lo, hi].
  static TransportMap1D tabulate(const std::function<double(double)>& f, double lo, double hi,
                                 std::size_t count);

  static TransportMap1D affine(double slope, double intercept);

  double operator()(double x) const noexcept;
  /// Derivative, right-continuous at knots.
  [[nodiscard]] double slope(double x) const noexcept;

  [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] double lipschitz_certificate() const noexcept { return certificate_; }
  [[nodiscard]] double max_slope() const noexcept { return max_slope_; }
  [[nodiscard]] double mean_under_gamma() const noexcept { return mean_; }
  [[nodiscard]] bool is_affine() const noexcept { return affine_; }

  /// Same map with a looser Lipschitz certificate. Throws DomainError if
  /// `certificate` is below the largest segment slope.
  [[nodiscard]] TransportMap1D with_certificate(double certificate) const;

 private:
  TransportMap1D() = default;
  void finalize();
  [[nodiscard]] std::size_t segment(double x) const noexcept;

  std::vector<double> knots_;
  std::vector<double> values_;
  std::vector<double> slopes_;  // slopes_[i] on [knots_[i], knots_[i+1]]
  bool affine_ = false;
  bool uniform_ = false;
  double lo_ = 0.0;
  double inv_step_ = 0.0;
  double a_slope_ = 0.0;
  double a_intercept_ = 0.0;
  double max_slope_ = 0.0;
  double certificate_ = 0.0;
  double mean_ = 0.0;
};

}  // namespace gsum
