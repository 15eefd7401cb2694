#include "gsum/numerics.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "gsum/errors.hpp"

namespace gsum {

GaussHermite::GaussHermite(std::size_t n) {
  if (n == 0) throw DomainError("Gauss-Hermite order must be positive");
  // Jacobi matrix of the monic probabilists' Hermite polynomials:
  // off-diagonal sqrt(k), k = 1..n-1.
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index k = 1; k < m; ++k) {
    jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  nodes_.resize(n);
  weights_.resize(n);
  for (Eigen::Index k = 0; k < m; ++k) {
    double x = es.eigenvalues()(k);
    // Newton on He_n using the normalized recurrence
    // h_{j+1} = (x h_j - sqrt(j) h_{j-1}) / sqrt(j+1), h_j = He_j / sqrt(j!).
    double hn = 0.0;
    double hn1 = 0.0;
    for (int it = 0; it < 4; ++it) {
      double h0 = 1.0;
      double h1 = x;
      if (n == 1) {
        hn = h1;
        hn1 = h0;
      } else {
        for (std::size_t j = 1; j < n; ++j) {
          const double h2 = (x * h1 - std::sqrt(static_cast<double>(j)) * h0) /
                            std::sqrt(static_cast<double>(j + 1));
          h0 = h1;
          h1 = h2;
        }
        hn = h1;
        hn1 = h0;
      }
      // d/dx h_n = sqrt(n) h_{n-1}
      const double dx = hn / (std::sqrt(static_cast<double>(n)) * hn1);
      x -= dx;
      if (std::abs(dx) < 1e-16 * (1.0 + std::abs(x))) break;
    }
    nodes_[static_cast<std::size_t>(k)] = x;
    // w = 1 / (n h_{n-1}(x)^2)
    double h0 = 1.0;
    double h1 = x;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double h2 = (x * h1 - std::sqrt(static_cast<double>(j)) * h0) /
                        std::sqrt(static_cast<double>(j + 1));
      h0 = h1;
      h1 = h2;
    }
    const double hprev = n == 1 ? 1.0 : h1;
    weights_[static_cast<std::size_t>(k)] = 1.0 / (static_cast<double>(n) * hprev * hprev);
  }
  double total = 0.0;
  for (double w : weights_) total += w;
  for (double& w : weights_) w /= total;
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                 double abs_tol) {
  if (a == b) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  const double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, 30, rel_tol, &err, &l1);
  if (!std::isfinite(val) || err > std::max(rel_tol * std::abs(val), abs_tol) * 1e3) {
    throw InternalError("integrate: quadrature did not converge (error estimate " +
                        std::to_string(err) + ")");
  }
  return val;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double x_tol,
                 int max_iter) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw InternalError("find_root: no sign change on bracket");
  boost::uintmax_t iters = static_cast<boost::uintmax_t>(max_iter);
  auto tol = [x_tol](double u, double v) { return std::abs(u - v) <= x_tol; };
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  return 0.5 * (r.first + r.second);
}

double operator_norm(const Eigen::MatrixXd& a, double rel_tol, int max_iter) {
  if (a.size() == 0) return 0.0;
  const Eigen::MatrixXd ata = a.transpose() * a;
  // Deterministic start with all coordinates nonzero and distinct.
  Eigen::VectorXd v(ata.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 1.0 + 0.1 * static_cast<double>(i);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = ata * v;
    const double next = v.dot(w);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    if (std::abs(next - lambda) <= rel_tol * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  // Rayleigh quotients approach from below; report the larger of the two.
  const double dense = std::sqrt(std::max(0.0, max_eigenvalue(ata)));
  return std::max(std::sqrt(std::max(0.0, lambda)), dense);
}

double max_eigenvalue(const Eigen::MatrixXd& sym) {
  if (sym.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

}  // namespace gsum
