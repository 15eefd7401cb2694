#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace gsum {

/// Gauss-Hermite rule for the standard normal weight: for polynomial P of
/// degree < 2n, sum_k weights[k] * P(nodes[k]) = E[P(Z)], Z ~ N(0,1).
/// Weights sum to one. Nodes come from the Golub-Welsch eigenproblem,
/// polished by Newton steps on the Hermite recurrence.
class GaussHermite {
 public:
  explicit GaussHermite(std::size_t n);

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] const std::vector<double>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }

  /// E[f(Z)].
  template <class F>
  double expectation(F&& f) const {
    double s = 0.0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) s += weights_[k] * f(nodes_[k]);
    return s;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Neumaier-compensated accumulator; order-dependent but reproducible.
class KahanSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  KahanSum& operator+=(double v) noexcept {
    add(v);
    return *this;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Adaptive Gauss-Kronrod integral of f over [a, b] (either end may be
/// infinite). Throws InternalError when the error estimate stays above
/// `rel_tol * |result| + abs_tol`.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-12, double abs_tol = 1e-14);

/// Root of f on [lo, hi] given a sign change; TOMS 748.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double x_tol = 1e-14, int max_iter = 200);

/// Spectral norm by power iteration on A^T A from a deterministic start
/// vector, stopped at relative change `rel_tol`.
double operator_norm(const Eigen::MatrixXd& a, double rel_tol = 1e-10, int max_iter = 10000);

/// Largest eigenvalue of a symmetric matrix (dense solver).
double max_eigenvalue(const Eigen::MatrixXd& sym);

}  // namespace gsum
