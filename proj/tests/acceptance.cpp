// Acceptance battery. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. An optional argument list restricts the
// run to the given criterion numbers.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cli.hpp"
#include "gsum/coupling1d.hpp"
#include "gsum/geometry.hpp"
#include "gsum/highdim.hpp"
#include "gsum/io.hpp"
#include "gsum/ito.hpp"
#include "gsum/numerics.hpp"
#include "gsum/orderstats.hpp"
#include "gsum/parallel.hpp"
#include "gsum/prob.hpp"

using namespace gsum;
namespace fs = std::filesystem;

namespace {

// Tolerances. Changing any of these changes what the battery certifies.
constexpr double kPipelineKs = 0.01;
constexpr double kPipelineTv = 0.003;
constexpr double kMinDrop = 0.30;
constexpr double kPipelineSeconds = 300.0;
constexpr double kBalance = 1e-9;
constexpr double kMarginal = 1e-8;
constexpr double kItoKs = 0.005;
constexpr double kItoSeconds = 180.0;
constexpr double kIdentity = 1e-12;
constexpr double kVariance = 0.005;
constexpr double kCrossCov = 0.01;
constexpr double kC2 = 1.35532;
constexpr double kMinimaxGap = 1e-6;
constexpr double kBruteForce = 1e-3;
constexpr double kOrderGrowth = 1.9;
constexpr double kOrderSeconds = 300.0;
constexpr double kSteinhaus = 1e-6;

constexpr std::size_t kMillion = 1000000;

std::size_t threads() { return resolve_threads(0); }

std::size_t below(RandomSource& r, std::size_t n) { return static_cast<std::size_t>(r.uniform() * double(n)); }

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double phi_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double ks(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return ks_distance(v, phi_cdf);
}

double mean_of(const std::vector<double>& v) {
  KahanSum s;
  for (double x : v) s += x;
  return s.value() / static_cast<double>(v.size());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a named check; the first failing check is listed first.
  void check(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail.str("FAILED " + what + "; " + detail.str());
      else detail << "FAILED " << what << "; ";
      pass = false;
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Named {
  const char* name;
  DiscreteDistribution1D dist;
  double audit_ratio_bound;
};

std::vector<Named> test_distributions() {
  const std::vector<double> two{-0.05, 0.05};
  const std::vector<double> three{-0.05, 0.0, 0.05};
  return {{"delta0", DiscreteDistribution1D::point_mass(0.0), 1.000001},
          {"uniform2", DiscreteDistribution1D::uniform(two), 2.49},
          {"uniform3", DiscreteDistribution1D::uniform(three), 1.94}};
}

// ---------------------------------------------------------------------------

void three_gaussians(Outcome& o) {
  for (const auto& [name, s, bound] : test_distributions()) {
    const auto t0 = std::chrono::steady_clock::now();
    ItoConfig fine;
    fine.steps = 4096;
    const ThreeGaussiansPipeline p(s, fine);
    const auto draws = p.sample_many(RandomSource(42), kMillion, threads());
    std::vector<double> g1, g2, g3, sv, err;
    for (const auto& d : draws) {
      g1.push_back(d.g1);
      g2.push_back(d.g2);
      g3.push_back(d.g3);
      sv.push_back(d.s);
      err.push_back(d.reconstruction_error);
    }
    const double k1 = ks(g1), k2 = ks(g2), k3 = ks(g3);
    const double tv = total_variation_to_atoms(sv, s);
    const double e_fine = mean_of(err);

    ItoConfig coarse;
    coarse.steps = 1024;
    const ThreeGaussiansPipeline q(s, coarse);
    std::vector<double> err_coarse;
    for (const auto& d : q.sample_many(RandomSource(42), kMillion, threads())) err_coarse.push_back(d.reconstruction_error);
    const double e_coarse = mean_of(err_coarse);
    const double secs = seconds_since(t0);

    const std::string n(name);
    o.check(std::max({k1, k2, k3}) <= kPipelineKs, n + " KS");
    o.check(tv <= kPipelineTv, n + " TV");
    double drop = 0.0;
    if (e_coarse <= 1e-12 && e_fine <= 1e-12) {
      // Exact reconstruction at both resolutions.
      drop = 1.0;
    } else {
      drop = 1.0 - e_fine / e_coarse;
      o.check(drop >= kMinDrop, n + " error drop");
    }
    o.check(secs <= kPipelineSeconds, n + " runtime");
    o.detail << n << ": KS " << fmt(std::max({k1, k2, k3})) << " TV " << fmt(tv) << " err " << fmt(e_coarse)
             << "->" << fmt(e_fine) << " (drop " << fmt(drop) << ") " << fmt(secs) << "s; ";
  }
}

void density_coupling(Outcome& o) {
  for (const auto& [name, s, bound] : test_distributions()) {
    const auto c = build_density_coupling(s);
    const double bal = std::abs(c.balance_residual());
    double marg = 0.0;
    for (int k = -8000; k <= 8000; ++k) {
      const double x = k * 1e-3;
      marg = std::max(marg, std::abs(gaussian_marginal_density(c, x) - phi_pdf(x)));
    }
    const auto a = density_ratio_audit(c);
    const double ratio = a.c_high / a.c_low;
    const std::string n(name);
    o.check(bal <= kBalance, n + " balance");
    o.check(marg <= kMarginal, n + " marginal");
    o.check(a.c_low > 0.0 && a.c_low <= a.c_high && std::isfinite(a.c_high), n + " audit range");
    o.check(ratio <= bound, n + " audit ratio");
    o.detail << n << ": balance " << fmt(bal) << " marginal " << fmt(marg) << " ratio " << fmt(ratio) << "; ";
  }
}

void ito_decomposition(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  {
    ItoConfig cfg;
    cfg.steps = 4096;
    const ItoDecomposer d(TransportMap1D::affine(1.0, 0.0), cfg);
    double worst = 0.0;
    for (const auto& p : d.sample_many(RandomSource(5), kMillion, threads())) worst = std::max(worst, std::abs(d.residual(p)));
    o.check(worst == 0.0, "identity residual");
    o.detail << "identity max|res| " << fmt(worst) << "; ";
  }
  const auto f = TransportMap1D::tabulate([](double x) { return std::tanh(x); }, -9.0, 9.0, 9217);
  std::vector<double> rms;
  double kx = 0.0, ky = 0.0;
  for (std::size_t steps : {1024u, 4096u}) {
    ItoConfig cfg;
    cfg.steps = steps;
    const ItoDecomposer d(f, cfg);
    const auto paths = d.sample_many(RandomSource(6), kMillion, threads());
    std::vector<double> xs, ys;
    KahanSum sq;
    for (const auto& p : paths) {
      xs.push_back(p.x);
      ys.push_back(p.y);
      const double e = d.residual(p);
      sq += e * e;
    }
    rms.push_back(std::sqrt(sq.value() / static_cast<double>(paths.size())));
    kx = ks(xs);
    ky = ks(ys);
  }
  const double drop = 1.0 - rms[1] / rms[0];
  const double secs = seconds_since(t0);
  o.check(std::max(kx, ky) <= kItoKs, "tanh KS");
  o.check(drop >= kMinDrop, "tanh residual drop");
  o.check(secs <= kItoSeconds, "runtime");
  o.detail << "tanh KS x " << fmt(kx) << " y " << fmt(ky) << " rms " << fmt(rms[0]) << "->" << fmt(rms[1]) << " (drop "
           << fmt(drop) << ") " << fmt(secs) << "s";
}

void linear_and_normalization(Outcome& o) {
  const std::size_t dim = 3;
  const Eigen::MatrixXd a = 0.6 * Eigen::MatrixXd::Identity(dim, dim);
  const LinearMapSplitter sp(a);
  RandomSource r(101);
  double worst = 0.0;
  Eigen::VectorXd vx = Eigen::VectorXd::Zero(dim), vy = vx, cxy = vx;
  Eigen::VectorXd g(dim);
  for (std::size_t i = 0; i < kMillion; ++i) {
    for (auto& c : g) c = r.normal();
    const auto v = sp.split(g, r);
    worst = std::max(worst, ((v.x + v.y) / 2 - a * g).cwiseAbs().maxCoeff());
    vx += v.x.cwiseProduct(v.x);
    vy += v.y.cwiseProduct(v.y);
    cxy += v.x.cwiseProduct(v.y);
  }
  vx /= double(kMillion);
  vy /= double(kMillion);
  cxy /= double(kMillion);
  const double var_dev = std::max((vx.array() - 1).abs().maxCoeff(), (vy.array() - 1).abs().maxCoeff());
  const double cov_dev = (cxy.array() + 0.28).abs().maxCoeff();
  o.check(worst <= kIdentity, "linear identity");
  o.check(var_dev <= kVariance, "linear variances");
  o.check(cov_dev <= kCrossCov, "linear Cov(x,y)");
  o.detail << "linear: identity " << fmt(worst) << " var dev " << fmt(var_dev) << " Cov " << fmt(cxy[0]) << "; ";

  const double t12 = 1.0 / (2.0 * std::numbers::sqrt2);
  const auto plan = NormalizationPlan::make(t12, t12, 1.0 / std::numbers::sqrt2);
  RandomSource q(102);
  double worst_n = 0.0, v1 = 0.0, v2 = 0.0, v3 = 0.0;
  for (std::size_t i = 0; i < kMillion; ++i) {
    const double g1 = q.normal(), g2 = q.normal(), g3 = q.normal();
    const auto t = normalization_triple(plan, g1, g2, g3, q);
    worst_n = std::max(worst_n, std::abs(t.g1 + t.g2 + t.g3 - (plan.tau1 * g1 + plan.tau2 * g2 + plan.tau3 * g3)));
    v1 += t.g1 * t.g1;
    v2 += t.g2 * t.g2;
    v3 += t.g3 * t.g3;
  }
  const double nd = std::max({std::abs(v1 / kMillion - 1), std::abs(v2 / kMillion - 1), std::abs(v3 / kMillion - 1)});
  o.check(worst_n <= kIdentity, "normalization identity");
  o.check(nd <= kVariance, "normalization variances");
  o.detail << "normalization: identity " << fmt(worst_n) << " var dev " << fmt(nd);
}

void bessel(Outcome& o) {
  for (std::size_t d : {2u, 4u, 8u, 16u, 32u, 64u}) {
    auto s = simplex_vectors(d);
    const RandomSource base(3 + d);
    const auto est = estimate_cd(s, kMillion, base.split(0), threads());
    s.c_d = est.c_d;
    s.c_d_stderr = est.std_error;
    const auto b = bessel_identity_check(s, kMillion, base.split(1), threads());
    const std::string n = "d=" + std::to_string(d);
    o.check(est.region_max_z <= est.critical_z, n + " regions");
    o.check(est.c_d > 0.1 && est.c_d < 10.0, n + " c_d range");
    o.check(b.vertex_max_z <= b.critical_z, n + " vertices");
    o.detail << n << " c_d " << fmt(est.c_d) << " z " << fmt(std::max(est.region_max_z, b.vertex_max_z)) << "/"
             << fmt(est.critical_z);
    if (d == 2) {
      const double z = std::abs(est.c_d - kC2) / est.std_error;
      o.check(z <= 3.0, "C_2 closed form");
      o.detail << " C_2 z " << fmt(z);
    }
    o.detail << "; ";
  }
}

std::vector<Eigen::VectorXd> admissible_instance(RandomSource& r, std::size_t m, std::size_t n, std::size_t k) {
  while (true) {
    std::vector<Eigen::VectorXd> v;
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < m; ++i) {
      Eigen::VectorXd x(n);
      for (auto& c : x) c = r.normal();
      x *= r.uniform() / x.norm();
      second += x * x.transpose() / double(m);
      v.push_back(x);
    }
    if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(second).eigenvalues().maxCoeff() <= 1.0 / double(k)) return v;
  }
}

void mss(Outcome& o) {
  RandomSource r(606);
  std::size_t certified = 0, roundtrips = 0;
  double worst_ratio = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 2 + t % 2;
    const std::size_t n = 1 + (t / 2) % 4;
    const std::size_t m = 2 * k + below(r, 13 - 2 * k);  // 2k..12
    const auto v = admissible_instance(r, m, n, k);
    const auto res = mss_partition(v, k);
    bool ok = res.certified;
    for (std::size_t j = 0; j < res.parts.size(); ++j) {
      ok = ok && double(res.sizes[j]) >= double(k) / 3.0 && res.per_part_norm[j] <= 50.0 / double(k);
      worst_ratio = std::max(worst_ratio, res.per_part_norm[j] / (50.0 / double(k)));
    }
    certified += ok;
    const auto back = parse_partition(to_json(PartitionFile{v, res}));
    bool same = verify_partition(back.vectors, back.result) && back.result.parts == res.parts;
    for (std::size_t j = 0; same && j < res.per_part_norm.size(); ++j) {
      same = std::bit_cast<std::uint64_t>(back.result.per_part_norm[j]) == std::bit_cast<std::uint64_t>(res.per_part_norm[j]);
    }
    roundtrips += same;
  }
  o.check(certified == 50, "size and norm certificates");
  o.check(roundtrips == 50, "bit-exact round trip");
  o.detail << certified << "/50 certified, " << roundtrips << "/50 round trips, worst norm/bound " << fmt(worst_ratio);
}

double brute_force_game(const std::vector<Eigen::VectorXd>& pts, double tau) {
  // Trace-one Q = [[a, b], [b, 1-a]] with b^2 <= a(1-a). The objective is a
  // minimum of linear functions of (a, b), hence concave, so a zooming grid
  // converges to the maximum.
  auto value = [&](double a, double b) {
    double worst = INFINITY;
    for (const auto& s : pts) worst = std::min(worst, tau * (a * s[0] * s[0] + 2 * b * s[0] * s[1] + (1 - a) * s[1] * s[1]));
    return worst;
  };
  double best = -INFINITY, ca = 0.5, cb = 0.0, w = 1.0;
  for (int level = 0; level < 8; ++level) {
    double na = ca, nb = cb;
    for (int i = -100; i <= 100; ++i) {
      const double a = ca + w * i / 100;
      if (a < 0 || a > 1) continue;
      const double bmax = std::sqrt(a * (1 - a));
      for (int j = -100; j <= 100; ++j) {
        const double b = cb + w * j / 100;
        if (std::abs(b) > bmax) continue;
        const double v = value(a, b);
        if (v > best) best = v, na = a, nb = b;
      }
    }
    ca = na, cb = nb, w /= 10;
  }
  return best;
}

std::vector<Eigen::VectorXd> random_symmetric(RandomSource& r, std::size_t n, std::size_t pairs) {
  std::vector<Eigen::VectorXd> pts;
  for (std::size_t i = 0; i < pairs; ++i) {
    Eigen::VectorXd x(n);
    for (auto& c : x) c = r.normal();
    pts.push_back(x);
    pts.push_back(-x);
  }
  return pts;
}

void minimax(Outcome& o) {
  RandomSource r(707);
  double worst_gap = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto pts = random_symmetric(r, 1 + t % 3, 1 + below(r, 10));
    const auto g = ellipsoid_game(SymmetricPointSet(pts), 1.0);
    worst_gap = std::max(worst_gap, g.gap);
  }
  o.check(worst_gap <= kMinimaxGap, "duality gap");
  double worst_bf = 0.0;
  for (int t = 0; t < 8; ++t) {
    const auto pts = random_symmetric(r, 2, 2 + t);
    const auto g = ellipsoid_game(SymmetricPointSet(pts), 1.0);
    worst_bf = std::max(worst_bf, std::abs(g.dual_value - brute_force_game(pts, 1.0)));
  }
  o.check(worst_bf <= kBruteForce, "brute-force agreement");
  const std::vector<Eigen::VectorXd> e1{Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0)};
  const auto g = ellipsoid_game(SymmetricPointSet(e1), 1.0);
  const bool exact = g.primal_value == 1.0 && g.dual_value == 1.0 && g.q_star.q_matrix(0, 0) == 1.0 &&
                     g.q_star.q_matrix(1, 1) == 0.0 && g.q_star.q_matrix(0, 1) == 0.0;
  o.check(exact, "{±e1} example");
  o.detail << "max gap " << fmt(worst_gap) << " over 100 sets, brute-force diff " << fmt(worst_bf)
           << ", {±e1} " << (exact ? "exact" : "inexact");
}

void order_statistics(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  OrderStatsOptions opt;
  opt.threads = threads();
  const auto small = orderstats_moment_sum(ThetaFamily::all_gaussian(128), RandomSource(11).split(0), opt);
  const auto large = orderstats_moment_sum(ThetaFamily::all_gaussian(8192), RandomSource(11).split(1), opt);
  const double growth = large.moment_sum / small.moment_sum;
  o.check(growth <= kOrderGrowth, "growth");

  double slack = INFINITY;
  for (std::size_t n : {64u, 128u, 1024u, 8192u}) slack = std::min(slack, anchor_growth_check(n).min_slack);
  o.check(slack >= 0.0, "anchor growth");

  double excess = -INFINITY;
  opt.tails = true;
  for (std::size_t n : {64u, 1024u}) {
    const auto rep = orderstats_moment_sum(ThetaFamily::all_gaussian(n), RandomSource(12).split(n), opt);
    for (std::size_t i = 1; 2 * i <= n; ++i) {
      excess = std::max(excess, rep.lower_tail[i - 1] - analytic_tail_integral(n, i) - 3.0 * rep.lower_tail_stderr[i - 1]);
    }
  }
  o.check(excess <= 0.0, "tail domination");
  const double secs = seconds_since(t0);
  o.check(secs <= kOrderSeconds, "runtime");
  o.detail << "growth " << fmt(growth) << " anchor slack " << fmt(slack) << " worst tail excess " << fmt(excess) << " "
           << fmt(secs) << "s";
}

void geometry(Outcome& o) {
  double lo = 0.0, hi = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (phi_cdf(mid) < 2.0 / 3.0 ? lo : hi) = mid;
  }
  const double expected = lo + hi;  // 2 Phi^{-1}(2/3)
  const double delta = steinhaus_interval({{-INFINITY, 0.5 * expected}});
  o.check(std::abs(delta - expected) <= kSteinhaus, "Steinhaus half-line");
  o.detail << "delta " << delta << " vs " << expected << "; ";

  // Diagonal trace-0.1 family: even, one-hot, geometric and random splits in several dimensions.
  RandomSource r(909);
  std::vector<Eigen::VectorXd> family;
  for (std::size_t n : {1u, 2u, 3u, 5u, 10u, 50u}) {
    family.push_back(Eigen::VectorXd::Constant(n, 0.1 / double(n)));
    Eigen::VectorXd one = Eigen::VectorXd::Zero(n);
    one[0] = 0.1;
    family.push_back(one);
    Eigen::VectorXd geo(n);
    for (std::size_t i = 0; i < n; ++i) geo[i] = std::pow(0.5, double(i));
    family.push_back(0.1 * geo / geo.sum());
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd w(n);
      for (auto& c : w) c = -std::log(1.0 - r.uniform());
      family.push_back(0.1 * w / w.sum());
    }
  }
  double worst_margin = INFINITY;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto e = EllipsoidSpec::make(family[i].asDiagonal().toDenseMatrix());
    const auto m = gaussian_measure_ellipsoid(e, 200000, RandomSource(910).split(i), threads());
    worst_margin = std::min(worst_margin, m.estimate - (0.5 - 3.0 * m.std_error));
  }
  o.check(worst_margin >= 0.0, "ellipsoid measure");
  o.detail << family.size() << " ellipsoids, min margin over 1/2 " << fmt(worst_margin) << "; ";

  bool all = true;
  for (std::size_t n : {1u, 3u, 10u}) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    u[0] = 1.0;
    for (double d : {1.0, 2.0, 3.0}) {
      const auto rep = neighborhood_measure_check(HalfSpace{u, 0.0}, d, 200000, RandomSource(911).split(n * 10 + d),
                                                  threads());
      all = all && rep.passes();
    }
  }
  o.check(all, "half-space neighborhoods");
  o.detail << "half-spaces " << (all ? "pass" : "fail");
}

void reproducibility(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / "gsum_acceptance_suite";
  fs::remove_all(root);
  int codes[2];
  for (int run = 0; run < 2; ++run) {
    std::ostringstream out, err;
    codes[run] = cli::run({"suite", "--out-dir", (root / std::to_string(run)).string()}, out, err);
  }
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "0")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto other = root / "1" / fs::relative(entry.path(), root / "0");
    if (!fs::exists(other) || read_text_file(entry.path().string()) != read_text_file(other.string())) ++differing;
  }
  o.check(codes[0] == 0 && codes[1] == 0, "suite verdicts");
  o.check(files > 0 && differing == 0, "byte-identical reports");
  o.detail << files << " files compared, " << differing << " differ, exit codes " << codes[0] << "," << codes[1];
  fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"three_gaussians_pipeline", three_gaussians},
      {"density_coupling", density_coupling},
      {"ito_decomposition", ito_decomposition},
      {"linear_map_and_normalization", linear_and_normalization},
      {"bessel_construction", bessel},
      {"mss_partition", mss},
      {"minimax_game", minimax},
      {"order_statistics", order_statistics},
      {"geometry_checks", geometry},
      {"suite_reproducibility", reproducibility},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::printf("%s %2d %-30s %7.1fs  %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, seconds_since(t0),
                o.detail.str().c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
