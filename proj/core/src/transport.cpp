#include "gsum/transport.hpp"

#include <algorithm>
#include <cmath>

#include "gsum/errors.hpp"
#include "gsum/numerics.hpp"
#include "gsum/prob.hpp"

namespace gsum {

TransportMap1D TransportMap1D::tabulated(std::vector<double> knots, std::vector<double> values) {
  if (knots.size() < 2 || knots.size() != values.size()) {
    throw DomainError("transport map needs at least two knots with matching values");
  }
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (!(knots[i] < knots[i + 1])) throw DomainError("transport knots must be strictly increasing");
    if (values[i + 1] < values[i]) throw DomainError("transport values must be nondecreasing");
  }
  TransportMap1D m;
  m.knots_ = std::move(knots);
  m.values_ = std::move(values);
  m.finalize();
  return m;
}

TransportMap1D TransportMap1D::tabulate(const std::function<double(double)>& f, double lo,
                                        double hi, std::size_t count) {
  if (count < 2 || !(lo < hi)) throw DomainError("tabulate: need count >= 2 and lo < hi");
  std::vector<double> knots(count);
  std::vector<double> values(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    knots[i] = i + 1 == count ? hi : lo + step * static_cast<double>(i);
    values[i] = f(knots[i]);
  }
  return tabulated(std::move(knots), std::move(values));
}

TransportMap1D TransportMap1D::affine(double slope, double intercept) {
  if (!(slope >= 0.0) || !std::isfinite(slope) || !std::isfinite(intercept)) {
    throw DomainError("affine transport needs a finite nonnegative slope");
  }
  TransportMap1D m;
  m.affine_ = true;
  m.a_slope_ = slope;
  m.a_intercept_ = intercept;
  m.max_slope_ = slope;
  m.certificate_ = slope;
  m.mean_ = intercept;
  return m;
}

void TransportMap1D::finalize() {
  const std::size_t n = knots_.size();
  slopes_.resize(n - 1);
  max_slope_ = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    slopes_[i] = (values_[i + 1] - values_[i]) / (knots_[i + 1] - knots_[i]);
    max_slope_ = std::max(max_slope_, slopes_[i]);
  }
  certificate_ = max_slope_;

  lo_ = knots_.front();
  const double step = (knots_.back() - knots_.front()) / static_cast<double>(n - 1);
  uniform_ = true;
  for (std::size_t i = 0; i < n && uniform_; ++i) {
    uniform_ = std::abs(knots_[i] - (lo_ + step * static_cast<double>(i))) <= 1e-9 * step;
  }
  inv_step_ = 1.0 / step;

  // E[F(Z)] in closed form: on each piece F(x) = c0 + c1 x and
  // int_a^b (c0 + c1 x) phi = c0 (Phi(b) - Phi(a)) + c1 (phi(a) - phi(b)).
  KahanSum mean;
  const double s_left = slopes_.front();
  mean += (values_.front() - s_left * knots_.front()) * std_normal_cdf(knots_.front()) -
          s_left * std_normal_pdf(knots_.front());
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = knots_[i];
    const double b = knots_[i + 1];
    const double c0 = values_[i] - slopes_[i] * a;
    mean += c0 * (std_normal_cdf(b) - std_normal_cdf(a)) +
            slopes_[i] * (std_normal_pdf(a) - std_normal_pdf(b));
  }
  const double s_right = slopes_.back();
  mean += (values_.back() - s_right * knots_.back()) * std_normal_sf(knots_.back()) +
          s_right * std_normal_pdf(knots_.back());
  mean_ = mean.value();
}

std::size_t TransportMap1D::segment(double x) const noexcept {
  const std::size_t last = slopes_.size() - 1;
  if (x <= knots_.front()) return 0;
  if (x >= knots_.back()) return last;
  if (uniform_) {
    auto i = static_cast<std::size_t>((x - lo_) * inv_step_);
    i = std::min(i, last);
    // Guard against rounding at knot boundaries.
    if (x < knots_[i] && i > 0) --i;
    if (i < last && x >= knots_[i + 1]) ++i;
    return i;
  }
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  return std::min(static_cast<std::size_t>(it - knots_.begin()) - 1, last);
}

double TransportMap1D::operator()(double x) const noexcept {
  if (affine_) return a_slope_ * x + a_intercept_;
  const std::size_t i = segment(x);
  return values_[i] + slopes_[i] * (x - knots_[i]);
}

double TransportMap1D::slope(double x) const noexcept {
  if (affine_) return a_slope_;
  return slopes_[segment(x)];
}

TransportMap1D TransportMap1D::with_certificate(double certificate) const {
  if (!(certificate >= max_slope_)) {
    throw DomainError("Lipschitz certificate is below the largest segment slope");
  }
  TransportMap1D m = *this;
  m.certificate_ = certificate;
  return m;
}

}  // namespace gsum
