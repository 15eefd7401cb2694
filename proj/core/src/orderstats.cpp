#include "gsum/orderstats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>

#include "gsum/errors.hpp"
#include "gsum/numerics.hpp"
#include "gsum/parallel.hpp"
#include "gsum/prob.hpp"

namespace gsum {

std::vector<double> quantile_anchors(std::size_t n) {
  if (n < 2) throw DomainError("quantile_anchors: n must be >= 2");
  std::vector<double> r(n);
  const double dn = static_cast<double>(n);
  for (std::size_t k = 1; k <= n; ++k) {
    if (2 * k <= n) {
      r[k - 1] = std_normal_quantile(static_cast<double>(k) / dn);
    } else {
      // Mirror through 1 - p so both halves carry the same rounding.
      r[k - 1] = -std_normal_quantile(static_cast<double>(n - k + 1) / dn);
    }
  }
  return r;
}

const char* to_string(FamilyKind k) noexcept {
  switch (k) {
    case FamilyKind::kAllGaussian:
      return "all_gaussian";
    case FamilyKind::kQuantileStrips:
      return "quantile_strips";
    default:
      return "custom";
  }
}

FamilyKind parse_family(const std::string& name) {
  if (name == "gaussian" || name == "all_gaussian") return FamilyKind::kAllGaussian;
  if (name == "strips" || name == "quantile_strips") return FamilyKind::kQuantileStrips;
  throw DomainError("unknown family '" + name + "' (expected gaussian or strips)");
}

ThetaFamily ThetaFamily::all_gaussian(std::size_t n) {
  if (n < 2) throw DomainError("family size must be >= 2");
  return {n, FamilyKind::kAllGaussian};
}

ThetaFamily ThetaFamily::quantile_strips(std::size_t n) {
  if (n < 2) throw DomainError("family size must be >= 2");
  return {n, FamilyKind::kQuantileStrips};
}

ThetaFamily ThetaFamily::custom(std::vector<Sampler> samplers, std::vector<Cdf> cdfs) {
  if (samplers.size() < 2 || samplers.size() != cdfs.size()) {
    throw DomainError("custom family needs matching samplers and cdfs, at least 2");
  }
  ThetaFamily f(samplers.size(), FamilyKind::kCustom);
  f.samplers_ = std::move(samplers);
  f.cdfs_ = std::move(cdfs);
  const double dev = mixture_deviation(f);
  if (dev > 1e-6) {
    throw DomainError("custom family: mixture CDF deviates from Phi by " + std::to_string(dev));
  }
  return f;
}

double ThetaFamily::draw(std::size_t i, RandomSource& rng) const {
  switch (kind_) {
    case FamilyKind::kAllGaussian:
      return rng.normal();
    case FamilyKind::kQuantileStrips: {
      const double u = rng.uniform();
      const double dn = static_cast<double>(n_);
      if (2 * i < n_) return std_normal_quantile((static_cast<double>(i) + u) / dn);
      return -std_normal_quantile((static_cast<double>(n_ - i) - u) / dn);
    }
    default:
      return samplers_[i](rng);
  }
}

double ThetaFamily::cdf(std::size_t i, double x) const {
  switch (kind_) {
    case FamilyKind::kAllGaussian:
      return std_normal_cdf(x);
    case FamilyKind::kQuantileStrips: {
      const double dn = static_cast<double>(n_);
      const double v = x <= 0.0 ? dn * std_normal_cdf(x) - static_cast<double>(i)
                                : static_cast<double>(n_ - i) - dn * std_normal_sf(x);
      return std::clamp(v, 0.0, 1.0);
    }
    default:
      return cdfs_[i](x);
  }
}

double mixture_deviation(const ThetaFamily& f, std::size_t grid_points) {
  if (grid_points < 2) throw DomainError("mixture_deviation: grid needs >= 2 points");
  double worst = 0.0;
  for (std::size_t g = 0; g < grid_points; ++g) {
    const double x = -8.0 + 16.0 * static_cast<double>(g) / static_cast<double>(grid_points - 1);
    KahanSum s;
    for (std::size_t i = 0; i < f.n(); ++i) s += f.cdf(i, x);
    worst = std::max(worst, std::abs(s.value() / static_cast<double>(f.n()) - std_normal_cdf(x)));
  }
  return worst;
}

std::size_t default_reps(std::size_t n) noexcept { return n <= 1024 ? 200 : 100; }

OrderStatsReport orderstats_moment_sum(const ThetaFamily& family, const RandomSource& rng,
                                       const OrderStatsOptions& opt) {
  const std::size_t n = family.n();
  const std::size_t reps = opt.reps == 0 ? default_reps(n) : opt.reps;
  if (reps < 100) throw DomainError("orderstats: reps must be >= 100");
  const std::vector<double> r = quantile_anchors(n);
  std::vector<double> per_rep(reps);
  std::vector<double> lo, hi;
  if (opt.tails) {
    lo.assign(reps * n, 0.0);
    hi.assign(reps * n, 0.0);
  }
  parallel_shards(reps, opt.threads, [&](std::size_t rep) {
    RandomSource s = rng.split(rep);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = family.draw(i, s);
    std::sort(x.begin(), x.end());
    KahanSum acc;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x[i] - r[i];
      acc += d * d;
      if (opt.tails) {
        lo[rep * n + i] = d < 0.0 ? 0.5 * d * d : 0.0;
        hi[rep * n + i] = d > 0.0 ? 0.5 * d * d : 0.0;
      }
    }
    per_rep[rep] = acc.value();
  });

  auto mean_se = [reps](auto&& at) {
    KahanSum s, s2;
    for (std::size_t k = 0; k < reps; ++k) s += at(k);
    const double m = s.value() / static_cast<double>(reps);
    for (std::size_t k = 0; k < reps; ++k) {
      const double d = at(k) - m;
      s2 += d * d;
    }
    const double var = s2.value() / static_cast<double>(reps - 1);
    return std::pair{m, std::sqrt(var / static_cast<double>(reps))};
  };

  OrderStatsReport out;
  out.n = n;
  out.reps = reps;
  std::tie(out.moment_sum, out.std_error) = mean_se([&](std::size_t k) { return per_rep[k]; });
  out.ratio = n >= 3 ? out.moment_sum / (std::log(std::log(static_cast<double>(n))) + 1.0)
                     : std::numeric_limits<double>::quiet_NaN();
  if (opt.tails) {
    out.lower_tail.resize(n);
    out.lower_tail_stderr.resize(n);
    out.upper_tail.resize(n);
    out.upper_tail_stderr.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::tie(out.lower_tail[i], out.lower_tail_stderr[i]) =
          mean_se([&](std::size_t k) { return lo[k * n + i]; });
      std::tie(out.upper_tail[i], out.upper_tail_stderr[i]) =
          mean_se([&](std::size_t k) { return hi[k * n + i]; });
    }
  }
  return out;
}

double xi_bound(std::size_t i, double a) {
  const double di = static_cast<double>(i);
  if (!(a > 0.0 && a < di)) throw DomainError("xi_bound: a must lie in (0, i)");
  if (7.0 * a >= di) return std::exp(-(di - a) * (di - a) / (12.0 * a));
  return std::pow(4.0 * a / di, di / 8.0);
}

std::pair<double, double> mills_bounds(double x) {
  if (x > 0.0) throw DomainError("mills_bounds: x must be <= 0");
  if (x == 0.0) return {0.0, std::numeric_limits<double>::infinity()};
  const double ax = -x;
  const double upper = std_normal_pdf(x) / ax;
  return {ax * ax / (1.0 + ax * ax) * upper, upper};
}

namespace {

// Integrand t * xi_i(n Phi(r - t)) with the endpoints of (0, i) guarded.
double tail_integrand(std::size_t n, std::size_t i, double r, double t) {
  const double a = static_cast<double>(n) * std_normal_cdf(r - t);
  const double di = static_cast<double>(i);
  if (a <= 0.0) return 0.0;
  if (a >= di) return t;
  return t * xi_bound(i, a);
}

double fixed_rule(const std::function<double(double)>& f, double a, double b, std::size_t per_unit) {
  const auto panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) * per_unit)));
  const double h = (b - a) / static_cast<double>(panels);
  KahanSum s;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    s += boost::math::quadrature::gauss<double, 10>::integrate(f, lo, lo + h);
  }
  return s.value();
}

}  // namespace

double analytic_tail_integral(std::size_t n, std::size_t i, std::size_t panels) {
  if (n < 2 || i < 1 || 2 * i > n) throw DomainError("analytic_tail_integral: need 1 <= i <= n/2");
  const double dn = static_cast<double>(n);
  const double r = std_normal_quantile(static_cast<double>(i) / dn);
  const double t_switch = r - std_normal_quantile(static_cast<double>(i) / (7.0 * dn));
  const std::function<double(double)> f = [&](double t) { return tail_integrand(n, i, r, t); };
  auto piece = [&](double a, double b) {
    return panels == 0 ? integrate(f, a, b, 1e-13, 1e-300) : fixed_rule(f, a, b, panels);
  };
  KahanSum total;
  total += piece(0.0, t_switch);
  // Beyond the switch the integrand decays at least like (4/7)^(i/8) e^{-ct i/8}.
  for (double t = t_switch; t < 60.0; t += 1.0) {
    const double v = piece(t, t + 1.0);
    total += v;
    if (v <= 1e-18 * total.value()) break;
  }
  return total.value();
}

DecayAudit phi_decay_audit(double c, std::size_t grid) {
  if (grid < 2) throw DomainError("phi_decay_audit: grid must be >= 2");
  double largest = std::numeric_limits<double>::infinity();
  bool holds = true;
  for (std::size_t a = 0; a < grid; ++a) {
    const double x = -8.0 + 8.0 * static_cast<double>(a) / static_cast<double>(grid - 1);
    const double lx = std::log(std_normal_cdf(x));
    for (std::size_t b = 1; b < grid; ++b) {
      const double t = 8.0 * static_cast<double>(b) / static_cast<double>(grid - 1);
      const double drop = lx - std::log(std_normal_cdf(x - t));
      const double rate = drop / ((1.0 - x) * t);
      largest = std::min(largest, rate);
      if (std_normal_cdf(x - t) > std::exp(-c * (1.0 - x) * t) * std_normal_cdf(x)) holds = false;
    }
  }
  return {c, holds, largest};
}

AnchorGrowth anchor_growth_check(std::size_t n) {
  const std::vector<double> r = quantile_anchors(n);
  double slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; 2 * k <= n; ++k) {
    const double lhs = (1.0 + std::abs(r[k - 1])) * (1.0 + std::abs(r[k - 1]));
    const double rhs = (std::log(static_cast<double>(n) / static_cast<double>(k)) + 1.0) / 10.0;
    slack = std::min(slack, lhs - rhs);
  }
  return {slack >= 0.0, slack};
}

}  // namespace gsum
