#include "gsum/coupling1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gsum/errors.hpp"
#include "gsum/numerics.hpp"

namespace gsum {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool in_window(double x) { return std::abs(x) <= 1.0; }

// Indicator 1_{j,y0}: [y0, inf) when y0 < x_j, (-inf, y0] otherwise.
// `below` is the predicate "x_j <= y0" (or "x_j < y0" for left limits).
double g0_value(double xj, bool below, double y0, double nu, double x) {
  if (!in_window(xj)) return 0.0;
  const bool active = below ? x <= y0 : x >= y0;
  return active ? nu * std_normal_pdf(x - y0) : 0.0;
}

struct Betas {
  double alpha;
  double minus;
  double plus;
};

Betas betas(double xj, bool below, double y0, double nu) {
  if (!in_window(xj)) return {0.0, 0.5, 0.5};
  const double d = xj - y0;
  if (!below) {
    // g0 lives on [y0, inf); the part below x_j is [y0, x_j).
    return {0.5 * nu, 0.5 - nu * (std_normal_cdf(d) - 0.5), 0.5 - nu * std_normal_sf(d)};
  }
  // g0 lives on (-inf, y0]; the part below x_j is (-inf, x_j).
  return {0.5 * nu, 0.5 - nu * std_normal_cdf(d), 0.5 - nu * (0.5 - std_normal_cdf(d))};
}

// Residual with atoms at y0 counted as lower (strict = false) or as upper
// (strict = true, the left limit).
double residual(const DiscreteDistribution1D& s, double nu, double y0, bool strict) {
  KahanSum plus;
  KahanSum lower;
  for (const auto& a : s.atoms()) {
    const bool below = strict ? a.x < y0 : a.x <= y0;
    const Betas b = betas(a.x, below, y0, nu);
    plus += a.p * b.plus;
    if (below) lower += a.p * (1.0 - b.alpha);
  }
  return plus.value() - lower.value();
}

double bisect(const DiscreteDistribution1D& s, double nu, double lo, double hi, double tol) {
  double flo = residual(s, nu, lo, false);
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = residual(s, nu, mid, false);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct Balance {
  double y0;
  BalanceCase kind;
  std::optional<CaseBSplit> split;
};

std::optional<Balance> find_balance(const DiscreteDistribution1D& s, double nu,
                                    const CouplingOptions& opt) {
  struct Event {
    double y;
    std::ptrdiff_t atom;  // -1 for scan points
  };
  std::vector<Event> events;
  const auto steps = static_cast<long>(std::llround(2.0 / opt.scan_step));
  for (long k = 0; k <= steps; ++k) {
    const double y = k == steps ? 1.0 : -1.0 + opt.scan_step * static_cast<double>(k);
    events.push_back({y, -1});
  }
  const auto& atoms = s.atoms();
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    if (in_window(atoms[k].x)) events.push_back({atoms[k].x, static_cast<std::ptrdiff_t>(k)});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.y != b.y) return a.y < b.y;
    return a.atom > b.atom;  // atom before a coincident scan point
  });

  bool have_prev = false;
  double prev_y = 0.0;
  double prev_r = 0.0;
  auto sign_change = [](double a, double b) { return (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0); };

  for (const auto& e : events) {
    if (e.atom >= 0) {
      const double xk = e.y;
      const double left = residual(s, nu, xk, true);
      if (have_prev && prev_y < xk && (left == 0.0 || sign_change(prev_r, left))) {
        return Balance{bisect(s, nu, prev_y, xk, opt.bisect_tolerance), BalanceCase::kA, {}};
      }
      // Split case: residual is affine in the lower share p' of the atom.
      KahanSum plus;
      KahanSum lower;
      for (const auto& a : atoms) {
        const Betas b = betas(a.x, a.x <= xk, xk, nu);
        plus += a.p * b.plus;
        if (a.x < xk) lower += a.p * (1.0 - b.alpha);
      }
      const auto k = static_cast<std::size_t>(e.atom);
      const double one_minus_alpha = 1.0 - betas(xk, true, xk, nu).alpha;
      const double p_prime = (plus.value() - lower.value()) / one_minus_alpha;
      if (p_prime > 0.0 && p_prime <= atoms[k].p * (1.0 + 1e-14)) {
        return Balance{xk, BalanceCase::kB, CaseBSplit{k, std::min(p_prime, atoms[k].p)}};
      }
      have_prev = true;
      prev_y = xk;
      prev_r = residual(s, nu, xk, false);
      continue;
    }
    if (have_prev && e.y == prev_y) continue;
    const double r = residual(s, nu, e.y, false);
    if (r == 0.0) return Balance{e.y, BalanceCase::kA, {}};
    if (have_prev && sign_change(prev_r, r)) {
      return Balance{bisect(s, nu, prev_y, e.y, opt.bisect_tolerance), BalanceCase::kA, {}};
    }
    have_prev = true;
    prev_y = e.y;
    prev_r = r;
  }
  return std::nullopt;
}

bool g1_positive(const DiscreteDistribution1D& s, double nu, double y0,
                 const CouplingOptions& opt) {
  const auto n = static_cast<long>(std::llround(2.0 * opt.positivity_halfwidth / opt.positivity_step));
  for (const auto& a : s.atoms()) {
    if (!in_window(a.x)) continue;
    const bool below = a.x <= y0;
    for (long k = 0; k <= n; ++k) {
      const double x = -opt.positivity_halfwidth + opt.positivity_step * static_cast<double>(k);
      if (std_normal_pdf(x - a.x) - g0_value(a.x, below, y0, nu, x) <= 0.0) return false;
    }
  }
  return true;
}

// Mass of phi(. - m) on [a, b), keeping relative accuracy in both tails.
double gauss_mass(double m, double a, double b) {
  const double u = a - m;
  const double v = b - m;
  if (u >= v) return 0.0;
  if (u > 0.0) return std_normal_sf(u) - std_normal_sf(v);
  return std_normal_cdf(v) - std_normal_cdf(u);
}

double h1(const DensityCoupling& c, double z) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.atoms().size(); ++i) {
    s += c.atoms()[i].p * component_densities(c, i, z + c.atoms()[i].x).g1;
  }
  return s;
}

// h1(x - home) with the atom offsets differenced first, so the term for the
// home atom is evaluated at x itself and sits on the same side of y0 as x.
double h1_from(const DensityCoupling& c, double x, double home) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.atoms().size(); ++i) {
    s += c.atoms()[i].p * component_densities(c, i, x + (c.atoms()[i].x - home)).g1;
  }
  return s;
}

double side_weight(const DensityCoupling& c, const CouplingAtom& a) {
  return a.p * (1.0 - a.alpha) / (a.lower ? c.gamma_plus() : c.gamma_minus());
}

}  // namespace

double balance_residual_at(const DiscreteDistribution1D& s, double nu, double y0) {
  return residual(s, nu, y0, false);
}

double DensityCoupling::balance_residual() const noexcept {
  KahanSum plus;
  KahanSum lower;
  for (const auto& a : atoms_) {
    plus += a.p * a.beta_plus;
    if (a.lower) lower += a.p * (1.0 - a.alpha);
  }
  return plus.value() - lower.value();
}

DensityCoupling build_density_coupling(const DiscreteDistribution1D& s,
                                       const CouplingOptions& opt) {
  if (!(opt.nu > 0.0 && opt.nu < 0.5)) throw DomainError("coupling: nu must lie in (0, 1/2)");
  if (std::abs(s.mean()) > opt.center_tolerance) {
    throw DomainError("coupling: source is not centered (mean " + std::to_string(s.mean()) + ")");
  }
  const double kappa = subgaussian_norm(s).kappa;
  if (kappa > opt.kappa_max) {
    throw DomainError("coupling: subgaussian norm " + std::to_string(kappa) +
                      " exceeds admission threshold " + std::to_string(opt.kappa_max));
  }

  double nu = opt.nu;
  std::optional<Balance> balance;
  int halvings = 0;
  for (;; ++halvings) {
    if (halvings > opt.max_nu_halvings) {
      throw InternalError("coupling: nu could not be reduced enough for g_{j,1} > 0");
    }
    balance = find_balance(s, nu, opt);
    if (!balance) {
      throw InternalError("coupling: no y0 in [-1, 1] balances the construction");
    }
    if (g1_positive(s, nu, balance->y0, opt)) break;
    nu *= 0.5;
  }

  DensityCoupling c(s);
  c.y0_ = balance->y0;
  c.nu_ = nu;
  c.nu_halvings_ = halvings;
  c.case_ = balance->kind;
  c.split_ = balance->split;

  const auto& src = s.atoms();
  for (std::size_t k = 0; k < src.size(); ++k) {
    const double x = src[k].x;
    const bool below = x <= c.y0_;
    const Betas b = betas(x, below, c.y0_, nu);
    if (c.split_ && c.split_->atom_index == k) {
      const double pp = c.split_->p_prime;
      c.atoms_.push_back({x, pp, k, true, b.alpha, b.minus, b.plus});
      if (src[k].p - pp > 0.0) c.atoms_.push_back({x, src[k].p - pp, k, false, b.alpha, b.minus, b.plus});
    } else {
      c.atoms_.push_back({x, src[k].p, k, below, b.alpha, b.minus, b.plus});
    }
  }
  KahanSum gm;
  KahanSum gp;
  for (const auto& a : c.atoms_) {
    gm += a.p * a.beta_minus;
    gp += a.p * a.beta_plus;
    if (a.lower) ++c.i_y0_;
  }
  c.gamma_minus_ = gm.value();
  c.gamma_plus_ = gp.value();

  const double r = c.balance_residual();
  if (!(std::abs(r) <= 1e-9)) {
    throw InternalError("coupling: balance residual " + std::to_string(r) + " at returned y0");
  }

  // Closed-form pieces of f = (i) + (ii) + (iii).
  const double y0 = c.y0_;
  for (const auto& a : c.atoms_) {
    if (!in_window(a.x)) continue;
    const bool below = a.x <= y0;
    c.pieces_.push_back({a.p * nu, y0, below ? -kInf : y0, below ? y0 : kInf});
  }
  for (const auto& a : c.atoms_) {
    const double w = side_weight(c, a);
    const double lo = a.lower ? a.x : -kInf;
    const double hi = a.lower ? kInf : a.x;
    c.pieces_.push_back({w, a.x, lo, hi});
    for (const auto& b : c.atoms_) {
      if (!in_window(b.x)) continue;
      // g_{b,0}(x - a.x + b.x) restricted to the side of a.
      const double shift = y0 + a.x - b.x;
      const bool below = b.x <= y0;
      const double plo = std::max(lo, below ? -kInf : shift);
      const double phi = std::min(hi, below ? shift : kInf);
      if (plo < phi) c.pieces_.push_back({-w * b.p * nu, shift, plo, phi});
    }
  }
  return c;
}

ComponentDensities component_densities(const DensityCoupling& c, std::size_t j, double x) {
  const auto& a = c.atoms().at(j);
  const double phi = std_normal_pdf(x - a.x);
  const double g0 = g0_value(a.x, a.x <= c.y0(), c.y0(), c.nu(), x);
  return {g0, phi - g0};
}

double sum_density(const DensityCoupling& c, double x) {
  const auto& atoms = c.atoms();
  double term_i = 0.0;
  double term_ii = 0.0;
  double term_iii = 0.0;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    const auto& a = atoms[j];
    term_i += a.p * component_densities(c, j, x).g0;
    if (a.lower) {
      if (x >= a.x) term_iii += side_weight(c, a) * h1_from(c, x, a.x);
    } else {
      if (x < a.x) term_ii += side_weight(c, a) * h1_from(c, x, a.x);
    }
  }
  return term_i + term_ii + term_iii;
}

double gaussian_marginal_density(const DensityCoupling& c, double x) {
  const auto& atoms = c.atoms();
  double v = 0.0;
  double lower_w = 0.0;
  double upper_w = 0.0;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    const auto& a = atoms[j];
    v += a.p * component_densities(c, j, x + a.x).g0;
    (a.lower ? lower_w : upper_w) += a.p * (1.0 - a.alpha);
  }
  const double w = x < 0.0 ? upper_w / c.gamma_minus() : lower_w / c.gamma_plus();
  return v + w * h1(c, x);
}

double sum_cdf(const DensityCoupling& c, double x) {
  KahanSum s;
  for (const auto& p : c.pieces()) {
    if (x <= p.lo) continue;
    s += p.c * gauss_mass(p.m, p.lo, std::min(x, p.hi));
  }
  return std::clamp(s.value(), 0.0, 1.0);
}

double sum_sf(const DensityCoupling& c, double x) {
  KahanSum s;
  for (const auto& p : c.pieces()) {
    if (x >= p.hi) continue;
    s += p.c * gauss_mass(p.m, std::max(x, p.lo), p.hi);
  }
  return std::clamp(s.value(), 0.0, 1.0);
}

namespace {

double solve_quantile(const DensityCoupling& c, double z, double tol) {
  // Find x with P[S+G <= x] = Phi(z), working in the smaller tail.
  const bool left = z < 0.0;
  const double target = left ? std_normal_cdf(z) : std_normal_sf(z);
  auto f = [&](double x) { return left ? sum_cdf(c, x) - target : target - sum_sf(c, x); };
  double lo = z + c.y0() - 2.0;
  double hi = z + c.y0() + 2.0;
  for (int it = 0; it < 60 && f(lo) > 0.0; ++it) lo -= 2.0 * (it + 1);
  for (int it = 0; it < 60 && f(hi) < 0.0; ++it) hi += 2.0 * (it + 1);
  return find_root(f, lo, hi, tol);
}

}  // namespace

double sum_quantile(const DensityCoupling& c, double p) {
  return solve_quantile(c, std_normal_quantile(p), 1e-13);
}

DensityAudit density_ratio_audit(const DensityCoupling& c, double half_width, double grid_step) {
  if (!(half_width >= 4.0)) throw DomainError("density_ratio_audit: half_width must be >= 4");
  if (!(grid_step > 0.0)) throw DomainError("density_ratio_audit: grid_step must be positive");
  DensityAudit audit{kInf, 0.0, {}, c.y0()};
  const auto n = static_cast<long>(std::llround(2.0 * half_width / grid_step));
  audit.grid.reserve(static_cast<std::size_t>(n + 1));
  for (long k = 0; k <= n; ++k) {
    const double x = c.y0() - half_width + grid_step * static_cast<double>(k);
    const double f = sum_density(c, x);
    if (!(f > 0.0)) {
      throw InternalError("density_ratio_audit: nonpositive density at x = " + std::to_string(x));
    }
    const double ratio = f / std_normal_pdf(x - c.y0());
    audit.c_low = std::min(audit.c_low, ratio);
    audit.c_high = std::max(audit.c_high, ratio);
    audit.grid.push_back(x);
  }
  return audit;
}

CoupledPair sample_coupled_pair(const DensityCoupling& c, RandomSource& rng) {
  constexpr int kMaxRejections = 10000;
  const auto& atoms = c.atoms();
  std::size_t j = 0;
  {
    const double u = rng.uniform();
    double acc = 0.0;
    for (j = 0; j + 1 < atoms.size(); ++j) {
      acc += atoms[j].p;
      if (u < acc) break;
    }
  }
  const auto& a = atoms[j];
  const double y0 = c.y0();
  if (rng.uniform() < a.alpha) {
    // V_j: S + G ~ nu phi(. - y0) on the half-line selected by 1_{j,y0}.
    const double h = std::abs(rng.normal());
    const double sum = a.x <= y0 ? y0 - h : y0 + h;
    return {a.x, sum - a.x, j, true};
  }
  // W_+ (lower atoms) or W_- (upper atoms): pick component i with weight
  // p_i beta_{i,+/-}, then draw from g_{i,1}(. + x_i) on the half-line by
  // rejection from the half-normal.
  const bool plus = a.lower;
  const double total = plus ? c.gamma_plus() : c.gamma_minus();
  std::size_t i = 0;
  {
    const double u = rng.uniform() * total;
    double acc = 0.0;
    for (i = 0; i + 1 < atoms.size(); ++i) {
      acc += atoms[i].p * (plus ? atoms[i].beta_plus : atoms[i].beta_minus);
      if (u < acc) break;
    }
  }
  const auto& b = atoms[i];
  for (int it = 0; it < kMaxRejections; ++it) {
    const double h = std::abs(rng.normal());
    const double z = plus ? h : -h;
    const double uval = z + b.x;
    const double phi = std_normal_pdf(z);
    const double g0 = g0_value(b.x, b.x <= y0, y0, c.nu(), uval);
    if (g0 == 0.0 || rng.uniform() * phi < phi - g0) return {a.x, z, j, false};
  }
  throw InternalError("sample_coupled_pair: rejection sampler exceeded its iteration cap");
}

std::vector<double> conditional_atom_given_sum(const DensityCoupling& c, double t) {
  const auto& atoms = c.atoms();
  std::vector<double> w(atoms.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    const auto& a = atoms[j];
    double v = a.p * component_densities(c, j, t).g0;
    if (a.lower ? t >= a.x : t < a.x) v += side_weight(c, a) * h1_from(c, t, a.x);
    w[j] = v;
    total += v;
  }
  if (!(total > 0.0)) throw DomainError("conditional_atom_given_sum: f(t) = 0");
  for (double& v : w) v /= total;
  return w;
}

TransportMap1D bobkov_transport(const DensityCoupling& c, const BobkovOptions& opt) {
  if (c.source().size() == 1) {
    // S + G is exactly N(x0, 1).
    return TransportMap1D::affine(1.0, c.source().atoms().front().x);
  }
  if (opt.knots < 2 || !(opt.z_max > 0.0)) throw DomainError("bobkov_transport: bad knot grid");
  std::vector<double> knots(opt.knots);
  std::vector<double> values(opt.knots);
  const double step = 2.0 * opt.z_max / static_cast<double>(opt.knots - 1);
  for (std::size_t k = 0; k < opt.knots; ++k) {
    knots[k] = k + 1 == opt.knots ? opt.z_max : -opt.z_max + step * static_cast<double>(k);
    values[k] = solve_quantile(c, knots[k], opt.root_tolerance);
  }
  for (std::size_t k = 1; k < opt.knots; ++k) {
    if (values[k] < values[k - 1]) {
      throw InternalError("bobkov_transport: quantile table is not monotone");
    }
  }
  return TransportMap1D::tabulated(std::move(knots), std::move(values));
}

QuantizedDistribution quantize_distribution(const DiscreteDistribution1D& s,
                                            std::size_t max_atoms) {
  if (max_atoms == 0) throw DomainError("quantize_distribution: max_atoms must be positive");
  if (s.size() <= max_atoms) return {s, 0.0};
  const auto& atoms = s.atoms();
  std::vector<double> cum(atoms.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) cum[i] = (acc += atoms[i].p);
  std::vector<double> xs(max_atoms);
  const double k_total = static_cast<double>(max_atoms);
  for (std::size_t k = 0; k < max_atoms; ++k) {
    const double q = (static_cast<double>(k) + 0.5) / k_total;
    const auto it = std::lower_bound(cum.begin(), cum.end(), q);
    xs[k] = atoms[std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), atoms.size() - 1)].x;
  }
  double mean = 0.0;
  for (double x : xs) mean += x / k_total;
  for (double& x : xs) x -= mean;
  DiscreteDistribution1D q = DiscreteDistribution1D::uniform(xs);
  const double w1 = wasserstein1_1d(s, q);
  return {std::move(q), w1};
}

}  // namespace gsum
