#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gsum/random.hpp"

namespace gsum {

/// r_i = Phi^{-1}(i/n) for i <= n/2, Phi^{-1}((i-1)/n) above (1-based i).
/// For odd n the middle anchor is not zero; the lower half is unaffected.
std::vector<double> quantile_anchors(std::size_t n);

enum class FamilyKind { kAllGaussian, kQuantileStrips, kCustom };
const char* to_string(FamilyKind k) noexcept;
/// Accepts "gaussian", "all_gaussian", "strips", "quantile_strips".
FamilyKind parse_family(const std::string& name);

/// n probability measures on R whose average is the standard Gaussian.
class ThetaFamily {
 public:
  using Sampler = std::function<double(RandomSource&)>;
  using Cdf = std::function<double(double)>;

  static ThetaFamily all_gaussian(std::size_t n);
  /// theta_i is n * gamma_1 restricted to [Phi^{-1}((i-1)/n), Phi^{-1}(i/n)].
  static ThetaFamily quantile_strips(std::size_t n);
  /// Rejected with DomainError when the mixture CDF deviates from Phi by more
  /// than 1e-6 on the audit grid.
  static ThetaFamily custom(std::vector<Sampler> samplers, std::vector<Cdf> cdfs);

  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] FamilyKind kind() const noexcept { return kind_; }
  /// i is 0-based.
  double draw(std::size_t i, RandomSource& rng) const;
  [[nodiscard]] double cdf(std::size_t i, double x) const;

 private:
  ThetaFamily(std::size_t n, FamilyKind k) : n_(n), kind_(k) {}

  std::size_t n_;
  FamilyKind kind_;
  std::vector<Sampler> samplers_;
  std::vector<Cdf> cdfs_;
};

/// max over a grid on [-8, 8] of |(1/n) sum_i cdf_i(x) - Phi(x)|.
double mixture_deviation(const ThetaFamily& f, std::size_t grid_points = 1601);

/// 200 for n <= 1024, else 100.
std::size_t default_reps(std::size_t n) noexcept;

struct OrderStatsOptions {
  std::size_t reps = 0;  // 0 = default_reps(n)
  std::size_t threads = 1;
  /// Record per-index tail moments (memory reps * n).
  bool tails = false;
};

struct OrderStatsReport {
  std::size_t n;
  std::size_t reps;
  double moment_sum;
  double std_error;
  /// moment_sum / (ln ln n + 1); NaN for n < 3.
  double ratio;
  /// Per index (0-based): E[(r_i - X*_i)_+^2] / 2 = int_0^inf P[X*_i - r_i < -t] t dt,
  /// and the mirror quantity for the upper tail. Empty unless requested.
  std::vector<double> lower_tail;
  std::vector<double> lower_tail_stderr;
  std::vector<double> upper_tail;
  std::vector<double> upper_tail_stderr;
};

/// Throws DomainError when reps < 100. Rep r uses rng.split(r).
OrderStatsReport orderstats_moment_sum(const ThetaFamily& family, const RandomSource& rng,
                                       const OrderStatsOptions& opt = {});

/// exp(-(i-a)^2 / (12a)) for a >= i/7, else (4a/i)^(i/8). DomainError unless 0 < a < i.
double xi_bound(std::size_t i, double a);

/// For x < 0: (x^2/(1+x^2) phi(x)/|x|, phi(x)/|x|), which bracket Phi(x).
/// x = 0 gives (0, +inf). DomainError for x > 0.
std::pair<double, double> mills_bounds(double x);

/// int_0^inf xi_i(n Phi(r_i - t)) t dt for 1 <= i <= n/2 (1-based i), split at
/// the branch switch. panels = 0 selects adaptive quadrature; otherwise a fixed
/// composite rule with that many panels per unit length.
double analytic_tail_integral(std::size_t n, std::size_t i, std::size_t panels = 0);

struct DecayAudit {
  double c;
  bool holds;
  /// Smallest (log Phi(x) - log Phi(x-t)) / ((1+|x|) t) on the grid.
  double largest_c;
};

/// Checks Phi(x - t) <= exp(-c (1+|x|) t) Phi(x) on x in [-8, 0], t in (0, 8].
DecayAudit phi_decay_audit(double c = 0.3, std::size_t grid = 161);

struct AnchorGrowth {
  bool holds;
  /// min over i <= n/2 of (1+|r_i|)^2 - (ln(n/i) + 1)/10.
  double min_slack;
};

AnchorGrowth anchor_growth_check(std::size_t n);

}  // namespace gsum
