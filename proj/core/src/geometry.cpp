#include "gsum/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "gsum/errors.hpp"
#include "gsum/numerics.hpp"
#include "gsum/parallel.hpp"
#include "gsum/prob.hpp"

namespace gsum {
namespace {

constexpr std::size_t kShard = 1u << 16;

double top_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Eigen::MatrixXd weighted_cov(const std::vector<Eigen::VectorXd>& s, const Eigen::VectorXd& m) {
  const auto n = s.front().size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t p = 0; p < s.size(); ++p) out.noalias() += m[static_cast<Eigen::Index>(p)] * s[p] * s[p].transpose();
  return out;
}

double min_quadratic(const std::vector<Eigen::VectorXd>& s, const Eigen::MatrixXd& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& x : s) best = std::min(best, x.dot(q * x));
  return best;
}

struct Solved {
  Eigen::VectorXd m;
  double value;       // lambda_max(M(m))
  Eigen::MatrixXd q;  // trace one
  double lower;       // min_s s^T q s
  bool converged;
};

// Log-barrier path following for min t s.t. t I - sum m_p s_p s_p^T >= 0,
// m in the simplex. Every outer round yields a feasible m (upper bound) and a
// trace-one Q built from the barrier dual (lower bound).
Solved solve_min_top_eigenvalue(const std::vector<Eigen::VectorXd>& s, double tol, int max_iter) {
  const std::size_t pc = s.size();
  const auto n = s.front().size();
  const auto np = static_cast<Eigen::Index>(pc);
  Eigen::VectorXd m = Eigen::VectorXd::Constant(np, 1.0 / static_cast<double>(pc));
  Solved best{m, std::numeric_limits<double>::infinity(), Eigen::MatrixXd::Identity(n, n) / static_cast<double>(n),
              -std::numeric_limits<double>::infinity(), false};

  auto certify = [&](Eigen::VectorXd mm, const Eigen::MatrixXd& w) {
    mm = mm.cwiseMax(0.0);
    mm /= mm.sum();
    const Eigen::MatrixXd cov = weighted_cov(s, mm);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const double value = es.eigenvalues().maxCoeff();
    if (value < best.value) {
      best.value = value;
      best.m = mm;
    }
    std::vector<Eigen::MatrixXd> candidates;
    if (w.size() > 0) candidates.push_back(w / w.trace());
    const double scale = std::max(value, 1e-300);
    for (double rel : {1e-3, 1e-5, 1e-7, 1e-9, 0.0}) {
      std::vector<Eigen::Index> top;
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        if (es.eigenvalues()[i] >= value - rel * scale) top.push_back(i);
      }
      Eigen::MatrixXd v(n, static_cast<Eigen::Index>(top.size()));
      for (std::size_t c = 0; c < top.size(); ++c) v.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(top[c]);
      const Eigen::MatrixXd proj = v * v.transpose();
      candidates.push_back(proj / proj.trace());
      if (w.size() > 0) {
        const Eigen::MatrixXd pw = proj * w * proj;
        if (pw.trace() > 0.0) candidates.push_back(pw / pw.trace());
      }
    }
    for (auto& q : candidates) {
      q = 0.5 * (q + q.transpose());
      const double lo = min_quadratic(s, q);
      if (lo > best.lower) {
        best.lower = lo;
        best.q = q;
      }
    }
  };

  double t = top_eigenvalue(weighted_cov(s, m)) + 1.0;
  const double dof = static_cast<double>(n) + static_cast<double>(pc);
  double rho = 1.0;
  int iters = 0;

  auto objective = [&](const Eigen::VectorXd& mm, double tt, double r, Eigen::MatrixXd* w_out) {
    if ((mm.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd x = tt * Eigen::MatrixXd::Identity(n, n) - weighted_cov(s, mm);
    Eigen::LLT<Eigen::MatrixXd> llt(x);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = llt.matrixL()(i, i);
      if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
      logdet += 2.0 * std::log(d);
    }
    if (w_out) *w_out = llt.solve(Eigen::MatrixXd::Identity(n, n));
    return r * tt - logdet - mm.array().log().sum();
  };

  certify(m, Eigen::MatrixXd());
  while (iters < max_iter) {
    // Centering by equality-constrained Newton.
    for (int inner = 0; inner < 200 && iters < max_iter; ++inner, ++iters) {
      Eigen::MatrixXd w;
      const double f0 = objective(m, t, rho, &w);
      const Eigen::MatrixXd w2 = w * w;
      Eigen::VectorXd grad(np + 1);
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(np + 1, np + 1);
      std::vector<Eigen::VectorXd> ws(pc);
      for (std::size_t p = 0; p < pc; ++p) ws[p] = w * s[p];
      for (std::size_t p = 0; p < pc; ++p) {
        const auto ip = static_cast<Eigen::Index>(p);
        grad[ip] = s[p].dot(ws[p]) - 1.0 / m[ip];
        for (std::size_t q = 0; q <= p; ++q) {
          const double v = s[p].dot(ws[q]);
          h(ip, static_cast<Eigen::Index>(q)) = h(static_cast<Eigen::Index>(q), ip) = v * v;
        }
        h(ip, ip) += 1.0 / (m[ip] * m[ip]);
        h(ip, np) = h(np, ip) = -s[p].dot(w2 * s[p]);
      }
      grad[np] = rho - w.trace();
      h(np, np) = w2.trace();
      // Jacobi equilibration keeps the system usable when the barrier is stiff.
      const Eigen::VectorXd dscale = h.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(np + 2, np + 2);
      kkt.topLeftCorner(np + 1, np + 1) = dscale.asDiagonal() * h * dscale.asDiagonal();
      for (Eigen::Index p = 0; p < np; ++p) kkt(np + 1, p) = kkt(p, np + 1) = dscale[p];
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(np + 2);
      rhs.head(np + 1) = -dscale.cwiseProduct(grad);
      const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
      Eigen::VectorXd step = dscale.cwiseProduct(sol.head(np + 1));
      step.head(np).array() -= step.head(np).mean();
      const double decrement = -grad.dot(step);
      if (!(decrement > 1e-12)) break;
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        const Eigen::VectorXd m2 = m + alpha * step.head(np);
        const double t2 = t + alpha * step[np];
        const double f1 = objective(m2, t2, rho, nullptr);
        if (f1 <= f0 - 0.25 * alpha * decrement) {
          m = m2;
          t = t2;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    Eigen::MatrixXd w;
    objective(m, t, rho, &w);
    certify(m, w);
    if (best.value - best.lower <= 0.1 * tol) {
      best.converged = true;
      break;
    }
    if (dof / rho < 1e-4 * tol) break;
    rho *= 8.0;
  }
  if (best.value - best.lower <= tol) best.converged = true;
  return best;
}

}  // namespace

EllipsoidSpec EllipsoidSpec::make(const Eigen::MatrixXd& q) {
  if (q.rows() != q.cols() || q.rows() == 0) throw DomainError("ellipsoid: Q must be square");
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw DomainError("ellipsoid: Q must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12) throw DomainError("ellipsoid: Q must be positive semidefinite");
  return {q, q.trace()};
}

SymmetricPointSet::SymmetricPointSet(std::vector<Eigen::VectorXd> points) : points_(std::move(points)) {
  if (points_.empty()) throw DomainError("point set is empty");
  dim_ = static_cast<std::size_t>(points_.front().size());
  if (dim_ == 0) throw DomainError("points must have positive dimension");
  std::vector<bool> used(points_.size(), false);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (static_cast<std::size_t>(points_[i].size()) != dim_) throw DomainError("points differ in dimension");
    if (!points_[i].allFinite()) throw DomainError("points must be finite");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (used[i]) continue;
    if (points_[i].cwiseAbs().maxCoeff() <= 1e-12) {
      used[i] = true;
      reps_.push_back(points_[i]);
      members_.emplace_back(i, i);
      continue;
    }
    std::size_t partner = points_.size();
    for (std::size_t j = i + 1; j < points_.size(); ++j) {
      if (!used[j] && (points_[i] + points_[j]).cwiseAbs().maxCoeff() <= 1e-12) {
        partner = j;
        break;
      }
    }
    if (partner == points_.size()) {
      throw DomainError("point set is not symmetric: point " + std::to_string(i) + " has no negative partner");
    }
    used[i] = used[partner] = true;
    reps_.push_back(points_[i]);
    members_.emplace_back(i, partner);
  }
}

std::vector<double> SymmetricPointSet::point_mass(const std::vector<double>& pair_mass) const {
  std::vector<double> mu(points_.size(), 0.0);
  for (std::size_t p = 0; p < members_.size(); ++p) {
    const auto [a, b] = members_[p];
    if (a == b) {
      mu[a] = pair_mass[p];
    } else {
      mu[a] = 0.5 * pair_mass[p];
      mu[b] = 0.5 * pair_mass[p];
    }
  }
  return mu;
}

MinCovNorm min_cov_norm(const SymmetricPointSet& s, const GameOptions& opt) {
  double scale = 0.0;
  for (const auto& x : s.pairs()) scale = std::max(scale, x.squaredNorm());
  const std::size_t pc = s.pairs().size();
  if (scale == 0.0) {
    std::vector<double> pm(pc, 1.0 / static_cast<double>(pc));
    return {s.point_mass(pm), pm, 0.0, 0.0};
  }
  std::vector<Eigen::VectorXd> unit;
  for (const auto& x : s.pairs()) unit.push_back(x / std::sqrt(scale));
  const Solved r = solve_min_top_eigenvalue(unit, opt.tolerance / scale, opt.max_iterations);
  std::vector<double> pm(r.m.data(), r.m.data() + r.m.size());
  // Report the value of the returned measure on the original points.
  const Eigen::MatrixXd cov = weighted_cov(s.pairs(), r.m);
  return {s.point_mass(pm), pm, top_eigenvalue(cov), min_quadratic(s.pairs(), r.q)};
}

GameSolution ellipsoid_game(const SymmetricPointSet& s, double tau, const GameOptions& opt) {
  if (!(tau > 0.0)) throw DomainError("ellipsoid_game: tau must be positive");
  double scale = 0.0;
  for (const auto& x : s.pairs()) scale = std::max(scale, x.squaredNorm());
  const auto n = static_cast<Eigen::Index>(s.dim());
  if (scale == 0.0) {
    std::vector<double> pm(s.pairs().size(), 1.0 / static_cast<double>(s.pairs().size()));
    const Eigen::MatrixXd q = tau * Eigen::MatrixXd::Identity(n, n) / static_cast<double>(n);
    return {EllipsoidSpec::make(q), s.point_mass(pm), 0.0, 0.0, 0.0, true};
  }
  std::vector<Eigen::VectorXd> unit;
  for (const auto& x : s.pairs()) unit.push_back(x / std::sqrt(scale));
  const Solved r = solve_min_top_eigenvalue(unit, opt.tolerance / (tau * scale), opt.max_iterations);
  const Eigen::MatrixXd q = tau * r.q;
  const double primal = min_quadratic(s.pairs(), q);
  const double dual = tau * top_eigenvalue(weighted_cov(s.pairs(), r.m));
  if (primal > dual + 1e-9 * std::max(1.0, std::abs(dual))) {
    throw InternalError("ellipsoid_game: weak duality violated (primal " + std::to_string(primal) +
                        " > dual " + std::to_string(dual) + ")");
  }
  std::vector<double> pm(r.m.data(), r.m.data() + r.m.size());
  const double gap = std::abs(primal - dual);
  return {EllipsoidSpec::make(0.5 * (q + q.transpose())), s.point_mass(pm), primal, dual, gap,
          gap <= opt.tolerance};
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::kTrue:
      return "true";
    case Verdict::kFalse:
      return "false";
    default:
      return "indeterminate";
  }
}

IntersectionCertificate ellipsoid_intersects(const SymmetricPointSet& s, double tau,
                                             const GameOptions& opt) {
  if (!(tau > 0.0)) throw DomainError("ellipsoid_intersects: tau must be positive");
  const GameSolution g = ellipsoid_game(s, tau, opt);
  IntersectionCertificate c{Verdict::kIndeterminate, g.dual_value / tau, 1.0 / tau, {}, std::nullopt, 0.0};
  const double band = 10.0 * opt.tolerance;
  if (g.dual_value <= 1.0 - band) {
    c.verdict = Verdict::kTrue;
    c.mu = g.mu_star;
  } else if (g.primal_value >= 1.0 + band) {
    c.verdict = Verdict::kFalse;
    c.q = g.q_star;
    c.q_min_value = g.primal_value;
  }
  return c;
}

MeasureEstimate gaussian_measure_ellipsoid(const EllipsoidSpec& e, std::size_t nsamples,
                                           const RandomSource& rng, std::size_t threads) {
  if (nsamples < 10000) throw DomainError("gaussian_measure_ellipsoid: nsamples must be >= 10^4");
  const auto n = e.q_matrix.rows();
  const std::size_t shards = (nsamples + kShard - 1) / kShard;
  std::vector<std::uint64_t> hits(shards, 0);
  parallel_shards(shards, threads, [&](std::size_t sh) {
    RandomSource r = rng.split(sh);
    Eigen::VectorXd z(n);
    const std::size_t cnt = std::min(kShard, nsamples - sh * kShard);
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < cnt; ++i) {
      for (Eigen::Index k = 0; k < n; ++k) z[k] = r.normal();
      if (z.dot(e.q_matrix * z) <= 1.0) ++h;
    }
    hits[sh] = h;
  });
  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  const double p = static_cast<double>(total) / static_cast<double>(nsamples);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(nsamples)), nsamples};
}

std::vector<Interval> merge_intervals(std::vector<Interval> a) {
  for (const auto& x : a) {
    if (std::isnan(x.lo) || std::isnan(x.hi) || x.lo > x.hi) throw DomainError("interval with lo > hi");
  }
  std::sort(a.begin(), a.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  std::vector<Interval> out;
  for (const auto& x : a) {
    if (!out.empty() && x.lo <= out.back().hi) {
      out.back().hi = std::max(out.back().hi, x.hi);
    } else {
      out.push_back(x);
    }
  }
  return out;
}

double gaussian_measure(const std::vector<Interval>& a) {
  KahanSum s;
  for (const auto& x : merge_intervals(a)) {
    s += x.lo >= 0.0 ? std_normal_sf(x.lo) - std_normal_sf(x.hi) : std_normal_cdf(x.hi) - std_normal_cdf(x.lo);
  }
  return s.value();
}

std::vector<Interval> minkowski_sum(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  std::vector<Interval> out;
  for (const auto& x : a) {
    for (const auto& y : b) out.push_back({x.lo + y.lo, x.hi + y.hi});
  }
  return merge_intervals(std::move(out));
}

double steinhaus_interval(const std::vector<Interval>& a) {
  if (a.empty()) throw DomainError("steinhaus_interval: empty set");
  const double mass = gaussian_measure(a);
  if (mass < 2.0 / 3.0 - 1e-12) {
    throw DomainError("steinhaus_interval: gaussian measure " + std::to_string(mass) + " is below 2/3");
  }
  for (const auto& x : minkowski_sum(a, a)) {
    if (x.lo <= 0.0 && x.hi >= 0.0) return std::min(-x.lo, x.hi);
  }
  return 0.0;
}

namespace {

template <class Dist>
NeighborhoodReport neighborhood_mc(std::size_t dim, double d, double set_measure, std::size_t nsamples,
                                   const RandomSource& rng, std::size_t threads, Dist&& dist) {
  if (!(d >= 0.0)) throw DomainError("neighborhood_measure_check: D must be nonnegative");
  if (set_measure < 0.5 - 1e-12) {
    throw DomainError("neighborhood_measure_check: gaussian measure of S is " + std::to_string(set_measure) +
                      " < 1/2");
  }
  if (nsamples < 1000) throw DomainError("neighborhood_measure_check: nsamples must be >= 1000");
  const std::size_t shards = (nsamples + kShard - 1) / kShard;
  std::vector<std::uint64_t> hits(shards, 0);
  parallel_shards(shards, threads, [&](std::size_t sh) {
    RandomSource r = rng.split(sh);
    Eigen::VectorXd z(static_cast<Eigen::Index>(dim));
    const std::size_t cnt = std::min(kShard, nsamples - sh * kShard);
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < cnt; ++i) {
      for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = r.normal();
      if (dist(z) <= d) ++h;
    }
    hits[sh] = h;
  });
  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  const double p = static_cast<double>(total) / static_cast<double>(nsamples);
  return {d, set_measure, p, std::sqrt(p * (1.0 - p) / static_cast<double>(nsamples)),
          1.0 - 2.0 * std::exp(-d * d / 2.0), std::nullopt};
}

}  // namespace

NeighborhoodReport neighborhood_measure_check(const HalfSpace& s, double d, std::size_t nsamples,
                                              const RandomSource& rng, std::size_t threads) {
  const double len = s.u.norm();
  if (!(std::abs(len - 1.0) <= 1e-12)) throw DomainError("half-space normal must be a unit vector");
  auto rep = neighborhood_mc(static_cast<std::size_t>(s.u.size()), d, std_normal_sf(s.b), nsamples, rng,
                             threads, [&](const Eigen::VectorXd& z) { return std::max(0.0, s.b - s.u.dot(z)); });
  rep.closed_form = std_normal_sf(s.b - d);
  return rep;
}

NeighborhoodReport neighborhood_measure_check(const GridSet& s, double d, std::size_t nsamples,
                                              const RandomSource& rng, std::size_t threads) {
  const auto n = s.origin.size();
  if (n == 0 || n > 3) throw DomainError("grid sets are limited to dimensions 1 to 3");
  if (!(s.cell > 0.0)) throw DomainError("grid cell size must be positive");
  std::set<std::vector<int>> distinct;
  for (const auto& c : s.cells) {
    if (c.size() != n) throw DomainError("grid cell index has wrong dimension");
    if (!distinct.insert(std::vector<int>(c.data(), c.data() + c.size())).second) {
      throw DomainError("grid cells must be distinct");
    }
  }
  KahanSum mass;
  for (const auto& c : s.cells) {
    double prod = 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double lo = s.origin[k] + s.cell * c[k];
      prod *= gaussian_measure({{lo, lo + s.cell}});
    }
    mass += prod;
  }
  return neighborhood_mc(static_cast<std::size_t>(n), d, mass.value(), nsamples, rng, threads,
                         [&](const Eigen::VectorXd& z) {
                           double best = std::numeric_limits<double>::infinity();
                           for (const auto& c : s.cells) {
                             double d2 = 0.0;
                             for (Eigen::Index k = 0; k < n; ++k) {
                               const double lo = s.origin[k] + s.cell * c[k];
                               const double gap = std::max({lo - z[k], 0.0, z[k] - lo - s.cell});
                               d2 += gap * gap;
                             }
                             best = std::min(best, d2);
                           }
                           return std::sqrt(best);
                         });
}

}  // namespace gsum
