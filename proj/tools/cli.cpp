#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gsum/coupling1d.hpp"
#include "gsum/errors.hpp"
#include "gsum/geometry.hpp"
#include "gsum/highdim.hpp"
#include "gsum/io.hpp"
#include "gsum/numerics.hpp"
#include "gsum/ito.hpp"
#include "gsum/orderstats.hpp"
#include "gsum/parallel.hpp"
#include "gsum/prob.hpp"
#include "gsum/version.hpp"

namespace gsum::cli {
namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::size_t kShard = 1u << 16;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t parse_count(const std::string& s, const std::string& flag) {
  double v = 0.0;
  std::size_t used = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !(v >= 0.0) || v > 1e12 || v != std::floor(v)) {
    throw CLI::ValidationError(flag, "expected a nonnegative integer, got '" + s + "'");
  }
  return static_cast<std::size_t>(v);
}

// Integer option that also accepts scientific notation ("1e6").
CLI::Option* add_count(CLI::App* app, const std::string& name, std::size_t& target, const std::string& desc) {
  return app
      ->add_option_function<std::string>(
          name, [&target, name](const std::string& s) { target = parse_count(s, name); }, desc)
      ->type_name("N");
}

std::string basename_of(const std::string& path) { return fs::path(path).filename().string(); }

double ks_critical(std::size_t n) { return 1.95 / std::sqrt(static_cast<double>(n)); }

double ks_threshold(double fixed, std::size_t n) { return std::max(fixed, ks_critical(n)); }

// Four binomial standard errors per atom, halved as in the TV definition.
double tv_threshold(double fixed, const DiscreteDistribution1D& d, std::size_t n) {
  double s = 0.0;
  for (const auto& a : d.atoms()) s += 4.0 * std::sqrt(a.p * (1.0 - a.p) / static_cast<double>(n));
  return std::max(fixed, 0.5 * s);
}

double ks_normal(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return ks_distance(v, [](double x) { return std_normal_cdf(x); });
}

double quantile_of_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
  return v[idx];
}

ojson quantiles(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  ojson q;
  q["p50"] = quantile_of_sorted(v, 0.5);
  q["p90"] = quantile_of_sorted(v, 0.9);
  q["p99"] = quantile_of_sorted(v, 0.99);
  q["max"] = v.empty() ? 0.0 : v.back();
  return q;
}

ojson vec_json(const Eigen::VectorXd& x) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

ojson mat_json(const Eigen::MatrixXd& m) {
  ojson a = ojson::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

ojson dist_json(const DiscreteDistribution1D& d) {
  ojson atoms = ojson::array();
  for (const auto& a : d.atoms()) atoms.push_back({{"x", a.x}, {"p", a.p}});
  return atoms;
}

class Report {
 public:
  explicit Report(const std::string& command, std::uint64_t seed) {
    doc_["command"] = command;
    doc_["config"] = ojson::object();
    doc_["metrics"] = ojson::object();
    doc_["verdicts"] = ojson::object();
    doc_["provenance"] = {{"seed", seed},
                          {"version", kVersion},
                          {"rng", "splitmix64 counter streams, ziggurat normals"}};
  }

  ojson& config() { return doc_["config"]; }
  ojson& metrics() { return doc_["metrics"]; }

  // value <= threshold (or >=) decides pass/fail.
  void check(const std::string& name, const std::string& metric, double value, const std::string& relation,
             double threshold) {
    bool pass = false;
    if (relation == "<=") pass = value <= threshold;
    else if (relation == ">=") pass = value >= threshold;
    else if (relation == "<") pass = value < threshold;
    else if (relation == ">") pass = value > threshold;
    record(name, pass ? "pass" : "fail", metric, value, relation, threshold);
  }

  void record(const std::string& name, const std::string& status, const std::string& metric, double value,
              const std::string& relation, double threshold) {
    doc_["verdicts"][name] = {{"status", status},
                              {"metric", metric},
                              {"value", value},
                              {"relation", relation},
                              {"threshold", threshold}};
  }

  [[nodiscard]] int exit_code() const {
    for (const auto& [k, v] : doc_["verdicts"].items()) {
      if (v["status"] != "pass") return 1;
    }
    return 0;
  }

  [[nodiscard]] std::string dump() const { return doc_.dump(2) + "\n"; }

 private:
  ojson doc_;
};

struct Output {
  std::string out;
  std::string csv;
};

void add_output(CLI::App* app, Output& o) {
  app->add_option("--out", o.out, "Report path (JSON; stdout when omitted)");
  app->add_option("--csv", o.csv, "Plot-ready table path");
}

void add_threads(CLI::App* app, int& threads) {
  app->add_option("--threads", threads, "Worker threads (default: GSUM_THREADS, else 1)")
      ->check(CLI::NonNegativeNumber);
}

void guard_output(const Output& o, const std::vector<std::string>& inputs) {
  for (const auto* path : {&o.out, &o.csv}) {
    if (path->empty()) continue;
    for (const auto& in : inputs) {
      if (!in.empty() && fs::weakly_canonical(*path) == fs::weakly_canonical(in)) {
        throw UsageError("output " + *path + " would overwrite an input file");
      }
    }
  }
}

int finish(const Report& r, const Output& o, const std::string& csv, std::ostream& out) {
  if (!o.csv.empty() && !csv.empty()) write_file_atomic(o.csv, csv);
  if (o.out.empty()) {
    out << r.dump();
  } else {
    write_file_atomic(o.out, r.dump());
  }
  return r.exit_code();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// Draws n (s, g) pairs; shard k uses base.split(k).
void sample_pairs(const DensityCoupling& c, const RandomSource& base, std::size_t n, std::size_t threads,
                  std::vector<double>& s, std::vector<double>& g) {
  s.resize(n);
  g.resize(n);
  const std::size_t shards = (n + kShard - 1) / kShard;
  parallel_shards(shards, threads, [&](std::size_t k) {
    RandomSource r = base.split(k);
    const std::size_t end = std::min(n, (k + 1) * kShard);
    for (std::size_t i = k * kShard; i < end; ++i) {
      const auto p = sample_coupled_pair(c, r);
      s[i] = p.s;
      g[i] = p.g;
    }
  });
}

// ---------------------------------------------------------------------------

struct CoupleArgs {
  std::string dist;
  double nu = 0.1;
  double kappa_max = 0.05;
  double audit_half_width = 6.0;
  double audit_step = 1e-3;
  std::uint64_t seed = 7;
  std::size_t samples = 100000;
  int threads = 0;
  Output o;
};

int run_couple(const CoupleArgs& a, std::ostream& out) {
  guard_output(a.o, {a.dist});
  const auto s = parse_distribution_1d(read_text_file(a.dist), a.dist);
  if (a.samples < 1000) throw UsageError("--samples must be >= 1000");
  CouplingOptions opt;
  opt.nu = a.nu;
  opt.kappa_max = a.kappa_max;
  const auto c = build_density_coupling(s, opt);
  const auto audit = density_ratio_audit(c, a.audit_half_width, a.audit_step);

  double marginal_err = 0.0;
  for (int k = -8000; k <= 8000; ++k) {
    const double x = k * 1e-3;
    marginal_err = std::max(marginal_err, std::abs(gaussian_marginal_density(c, x) - std_normal_pdf(x)));
  }
  std::vector<double> sv, gv;
  sample_pairs(c, RandomSource(a.seed), a.samples, resolve_threads(a.threads), sv, gv);
  std::vector<double> sum(a.samples);
  for (std::size_t i = 0; i < a.samples; ++i) sum[i] = sv[i] + gv[i];
  std::sort(sum.begin(), sum.end());
  const double ks_sum = ks_distance(sum, [&](double x) { return sum_cdf(c, x); });
  const double ks_g = ks_normal(gv);
  const double tv_s = total_variation_to_atoms(sv, s);

  Report r("couple", a.seed);
  r.config() = {{"dist", basename_of(a.dist)},     {"source", dist_json(s)},
                {"nu", a.nu},                      {"kappa_max", a.kappa_max},
                {"audit_half_width", a.audit_half_width}, {"audit_step", a.audit_step},
                {"samples", a.samples},            {"seed", a.seed}};
  auto& m = r.metrics();
  m["y0"] = c.y0();
  m["case"] = c.balance_case() == BalanceCase::kA ? "a" : "b";
  if (c.case_b_split()) {
    m["split_atom"] = c.case_b_split()->atom_index;
    m["split_p_prime"] = c.case_b_split()->p_prime;
  }
  m["nu"] = c.nu();
  m["nu_halvings"] = c.nu_halvings();
  m["gamma_minus"] = c.gamma_minus();
  m["gamma_plus"] = c.gamma_plus();
  m["balance_residual"] = c.balance_residual();
  ojson atoms = ojson::array();
  for (const auto& at : c.atoms()) {
    atoms.push_back({{"x", at.x},
                     {"p", at.p},
                     {"source_index", at.source_index},
                     {"lower", at.lower},
                     {"alpha", at.alpha},
                     {"beta_minus", at.beta_minus},
                     {"beta_plus", at.beta_plus}});
  }
  m["atoms"] = atoms;
  m["audit_c_low"] = audit.c_low;
  m["audit_c_high"] = audit.c_high;
  m["audit_ratio"] = audit.c_high / audit.c_low;
  m["gaussian_marginal_max_error"] = marginal_err;
  m["ks_g"] = ks_g;
  m["ks_sum"] = ks_sum;
  m["tv_s"] = tv_s;

  r.check("balance_residual", "balance_residual", std::abs(c.balance_residual()), "<=", 1e-9);
  r.check("gaussian_marginal", "gaussian_marginal_max_error", marginal_err, "<=", 1e-8);
  r.check("audit_c_low_positive", "audit_c_low", audit.c_low, ">", 0.0);
  r.check("audit_c_high_finite", "audit_c_high", audit.c_high, "<", std::numeric_limits<double>::max());
  r.check("ks_g", "ks_g", ks_g, "<=", ks_threshold(0.01, a.samples));
  r.check("ks_sum", "ks_sum", ks_sum, "<=", ks_threshold(0.01, a.samples));
  r.check("tv_s", "tv_s", tv_s, "<=", tv_threshold(0.003, s, a.samples));

  std::string csv = "x,sum_density,ratio\n";
  for (double x = c.y0() - a.audit_half_width; x <= c.y0() + a.audit_half_width + 1e-12; x += 0.01) {
    const double f = sum_density(c, x);
    csv += fmt(x) + "," + fmt(f) + "," + fmt(f / std_normal_pdf(x - c.y0())) + "\n";
  }
  return finish(r, a.o, csv, out);
}

// ---------------------------------------------------------------------------

struct DecomposeArgs {
  std::string dist;
  std::size_t steps = 4096;
  std::size_t samples = 1000000;
  std::size_t compare_steps = 0;
  std::size_t compare_samples = 0;
  std::uint64_t seed = 42;
  int threads = 0;
  Output o;
};

int run_decompose(const DecomposeArgs& a, std::ostream& out) {
  guard_output(a.o, {a.dist});
  const auto s = parse_distribution_1d(read_text_file(a.dist), a.dist);
  if (a.samples < 1000) throw UsageError("--samples must be >= 1000");
  const std::size_t threads = resolve_threads(a.threads);
  ItoConfig cfg;
  cfg.steps = a.steps;
  const ThreeGaussiansPipeline p(s, cfg);
  const auto draws = p.sample_many(RandomSource(a.seed), a.samples, threads);
  std::vector<double> g1, g2, g3, sv, err;
  for (const auto& d : draws) {
    g1.push_back(d.g1);
    g2.push_back(d.g2);
    g3.push_back(d.g3);
    sv.push_back(d.s);
    err.push_back(d.reconstruction_error);
  }
  auto mean = [](const std::vector<double>& v) {
    KahanSum k;
    for (double x : v) k += x;
    return k.value() / static_cast<double>(v.size());
  };

  Report r("decompose", a.seed);
  r.config() = {{"dist", basename_of(a.dist)}, {"source", dist_json(s)}, {"steps", a.steps},
                {"samples", a.samples},         {"compare_steps", a.compare_steps},
                {"compare_samples", a.compare_samples == 0 ? a.samples : a.compare_samples},
                {"seed", a.seed}};
  auto& m = r.metrics();
  m["c_emp"] = p.c_emp();
  m["c_iterations"] = p.c_iterations();
  m["scale"] = p.scale();
  m["y0"] = p.coupling().y0();
  m["nu"] = p.coupling().nu();
  m["audit_c_low"] = p.audit().c_low;
  m["audit_c_high"] = p.audit().c_high;
  m["transport_max_slope"] = p.transport().max_slope();
  m["lipschitz"] = p.decomposer().lipschitz();
  m["tau"] = {p.plan().tau1, p.plan().tau2, p.plan().tau3};
  const double ks1 = ks_normal(g1), ks2 = ks_normal(g2), ks3 = ks_normal(g3);
  const double tv = total_variation_to_atoms(sv, s);
  m["ks_g1"] = ks1;
  m["ks_g2"] = ks2;
  m["ks_g3"] = ks3;
  m["tv_s"] = tv;
  const double mean_err = mean(err);
  m["reconstruction_error_mean"] = mean_err;
  m["reconstruction_error_quantiles"] = quantiles(err);

  const double ks_tol = ks_threshold(0.01, a.samples);
  r.check("ks_g1", "ks_g1", ks1, "<=", ks_tol);
  r.check("ks_g2", "ks_g2", ks2, "<=", ks_tol);
  r.check("ks_g3", "ks_g3", ks3, "<=", ks_tol);
  r.check("tv_s", "tv_s", tv, "<=", tv_threshold(0.003, s, a.samples));

  std::string csv = "steps,samples,reconstruction_error_mean\n";
  if (a.compare_steps > 0) {
    ItoConfig c2;
    c2.steps = a.compare_steps;
    const std::size_t n2 = a.compare_samples == 0 ? a.samples : a.compare_samples;
    const ThreeGaussiansPipeline q(s, c2);
    std::vector<double> e2;
    for (const auto& d : q.sample_many(RandomSource(a.seed), n2, threads)) e2.push_back(d.reconstruction_error);
    const double coarse = mean(e2);
    m["convergence"] = ojson::array({{{"steps", a.compare_steps}, {"samples", n2}, {"error_mean", coarse}},
                                     {{"steps", a.steps}, {"samples", a.samples}, {"error_mean", mean_err}}});
    csv += std::to_string(a.compare_steps) + "," + std::to_string(n2) + "," + fmt(coarse) + "\n";
    if (coarse <= 1e-12 && mean_err <= 1e-12) {
      // Exact reconstruction at both resolutions.
      r.check("reconstruction_converges", "reconstruction_error_mean", mean_err, "<=", 1e-12);
    } else {
      const double drop = 1.0 - mean_err / coarse;
      m["reconstruction_drop"] = drop;
      r.check("reconstruction_converges", "reconstruction_drop", drop, ">=", 0.3);
    }
  }
  csv += std::to_string(a.steps) + "," + std::to_string(a.samples) + "," + fmt(mean_err) + "\n";
  return finish(r, a.o, csv, out);
}

// ---------------------------------------------------------------------------

struct VerifyItoArgs {
  std::string fn = "tanh";
  std::vector<std::size_t> steps{1024, 4096};
  std::size_t samples = 100000;
  std::uint64_t seed = 5;
  int threads = 0;
  Output o;
};

TransportMap1D named_map(const std::string& fn) {
  if (fn == "identity") return TransportMap1D::affine(1.0, 0.0);
  if (fn == "tanh") return TransportMap1D::tabulate([](double x) { return std::tanh(x); }, -9.0, 9.0, 9217);
  throw UsageError("--fn must be identity or tanh");
}

int run_verify_ito(const VerifyItoArgs& a, std::ostream& out) {
  guard_output(a.o, {});
  if (a.steps.empty()) throw UsageError("--steps needs at least one value");
  if (a.samples < 1000) throw UsageError("--samples must be >= 1000");
  const auto f = named_map(a.fn);
  const std::size_t threads = resolve_threads(a.threads);
  Report r("verify-ito", a.seed);
  r.config() = {{"fn", a.fn}, {"steps", a.steps}, {"samples", a.samples}, {"seed", a.seed}};
  ojson table = ojson::array();
  std::string csv = "steps,ks_x,ks_y,residual_rms,residual_max\n";
  std::vector<double> rms_list;
  double ks_x_last = 0.0, ks_y_last = 0.0, max_abs_all = 0.0;
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    ItoConfig cfg;
    cfg.steps = a.steps[k];
    const ItoDecomposer d(f, cfg);
    const auto paths = d.sample_many(RandomSource(a.seed), a.samples, threads);
    std::vector<double> xs, ys, res;
    KahanSum sq;
    for (const auto& p : paths) {
      xs.push_back(p.x);
      ys.push_back(p.y);
      const double e = d.residual(p);
      res.push_back(std::abs(e));
      sq += e * e;
    }
    const double rms = std::sqrt(sq.value() / static_cast<double>(paths.size()));
    ks_x_last = ks_normal(xs);
    ks_y_last = ks_normal(ys);
    const auto q = quantiles(res);
    max_abs_all = std::max(max_abs_all, q["max"].get<double>());
    table.push_back({{"steps", a.steps[k]},
                     {"ks_x", ks_x_last},
                     {"ks_y", ks_y_last},
                     {"residual_rms", rms},
                     {"residual_abs_quantiles", q}});
    csv += std::to_string(a.steps[k]) + "," + fmt(ks_x_last) + "," + fmt(ks_y_last) + "," + fmt(rms) + "," +
           fmt(q["max"].get<double>()) + "\n";
    rms_list.push_back(rms);
  }
  r.metrics()["convergence"] = table;
  const double ks_tol = ks_threshold(0.005, a.samples);
  r.check("ks_x", "ks_x_finest", ks_x_last, "<=", ks_tol);
  r.check("ks_y", "ks_y_finest", ks_y_last, "<=", ks_tol);
  r.metrics()["ks_x_finest"] = ks_x_last;
  r.metrics()["ks_y_finest"] = ks_y_last;
  if (a.fn == "identity") {
    r.metrics()["residual_max_abs"] = max_abs_all;
    r.check("residual_exact", "residual_max_abs", max_abs_all, "<=", 0.0);
  } else {
    for (std::size_t k = 1; k < a.steps.size(); ++k) {
      if (a.steps[k] < 4 * a.steps[k - 1]) continue;
      const double drop = 1.0 - rms_list[k] / rms_list[k - 1];
      const std::string name = "residual_drop_" + std::to_string(a.steps[k - 1]) + "_" + std::to_string(a.steps[k]);
      r.metrics()[name] = drop;
      r.check(name, name, drop, ">=", 0.3);
    }
  }
  return finish(r, a.o, csv, out);
}

// ---------------------------------------------------------------------------

struct BesselArgs {
  std::size_t d = 8;
  std::size_t samples = 1000000;
  std::uint64_t seed = 3;
  int threads = 0;
  Output o;
};

int run_bessel(const BesselArgs& a, std::ostream& out) {
  guard_output(a.o, {});
  const std::size_t threads = resolve_threads(a.threads);
  auto s = simplex_vectors(a.d);
  const RandomSource base(a.seed);
  const auto est = estimate_cd(s, a.samples, base.split(0), threads);
  s.c_d = est.c_d;
  s.c_d_stderr = est.std_error;
  const auto b = bessel_identity_check(s, a.samples, base.split(1), threads);

  Report r("bessel", a.seed);
  r.config() = {{"d", a.d}, {"samples", a.samples}, {"seed", a.seed}};
  auto& m = r.metrics();
  m["c_d"] = est.c_d;
  m["c_d_stderr"] = est.std_error;
  m["region_counts"] = est.region_counts;
  m["region_max_z"] = est.region_max_z;
  m["per_region"] = est.per_region;
  m["orthogonal_max_z"] = est.orthogonal_max_z;
  m["critical_z"] = est.critical_z;
  m["vertex_counts"] = b.vertex_counts;
  m["vertex_max_z"] = b.vertex_max_z;
  m["residual_mean"] = b.residual_mean;
  m["residual_max_z"] = b.residual_max_z;
  m["residual_second_moment"] = b.residual_second_moment;
  r.check("regions_uniform", "region_max_z", est.region_max_z, "<=", est.critical_z);
  r.check("conditional_mean_aligned", "orthogonal_max_z", est.orthogonal_max_z, "<=", est.critical_z);
  r.check("c_d_lower", "c_d", est.c_d, ">", 0.1);
  r.check("c_d_upper", "c_d", est.c_d, "<", 10.0);
  r.check("vertices_uniform", "vertex_max_z", b.vertex_max_z, "<=", b.critical_z);
  r.check("residual_centered", "residual_max_z", b.residual_max_z, "<=", b.critical_z);
  if (a.d == 2) {
    // Known closed form at d = 2.
    const double closed = 1.35532;
    const double z = std::abs(est.c_d - closed) / est.std_error;
    m["c_2_closed_form"] = closed;
    m["c_2_z"] = z;
    r.check("c_2_closed_form", "c_2_z", z, "<=", 3.0);
  }
  std::string csv = "region,count,frequency,conditional_mean\n";
  for (std::size_t j = 0; j < a.d; ++j) {
    csv += std::to_string(j) + "," + std::to_string(est.region_counts[j]) + "," +
           fmt(static_cast<double>(est.region_counts[j]) / static_cast<double>(a.samples)) + "," +
           fmt(est.per_region[j]) + "\n";
  }
  return finish(r, a.o, csv, out);
}

// ---------------------------------------------------------------------------

struct PartitionArgs {
  std::string vectors;
  std::size_t k = 2;
  std::string strategy = "exhaustive";
  std::uint64_t seed = 0;
  std::size_t restarts = 64;
  std::size_t sweeps = 200;
  std::size_t min_part_size = 1;
  std::string certificate;
  int threads = 0;
  Output o;
};

int run_partition(const PartitionArgs& a, std::ostream& out) {
  guard_output(a.o, {a.vectors});
  if (!a.certificate.empty() && fs::weakly_canonical(a.certificate) == fs::weakly_canonical(a.vectors)) {
    throw UsageError("certificate path would overwrite the input");
  }
  const auto v = parse_vectors_csv(read_text_file(a.vectors), a.vectors);
  PartitionOptions opt;
  opt.strategy = parse_strategy(a.strategy);
  opt.seed = a.seed;
  opt.restarts = a.restarts;
  opt.sweeps = a.sweeps;
  opt.min_part_size = a.min_part_size;
  opt.threads = resolve_threads(a.threads);
  const auto res = mss_partition(v, a.k, opt);
  const PartitionFile file{v, res};
  const std::string cert = to_json(file);
  const auto back = parse_partition(cert, "<certificate>");
  const bool roundtrip = verify_partition(back.vectors, back.result);

  Report r("partition", a.seed);
  ojson vj = ojson::array();
  for (const auto& x : v) vj.push_back(vec_json(x));
  r.config() = {{"vectors", basename_of(a.vectors)},
                {"data", vj},
                {"k", a.k},
                {"strategy", a.strategy},
                {"seed", a.seed},
                {"restarts", a.restarts},
                {"sweeps", a.sweeps},
                {"min_part_size", a.min_part_size}};
  auto& m = r.metrics();
  m["m"] = v.size();
  m["parts"] = res.parts;
  m["sizes"] = res.sizes;
  m["per_part_norm"] = res.per_part_norm;
  m["norm_bound"] = res.norm_bound;
  m["size_low"] = res.size_low;
  m["size_high"] = res.size_high;
  m["certified"] = res.certified;
  if (!res.failure.empty()) m["failure"] = res.failure;
  m["roundtrip_verified"] = roundtrip;
  double worst = 0.0;
  for (double x : res.per_part_norm) worst = std::max(worst, x);
  m["max_part_norm"] = worst;
  r.check("certified", "certified", res.certified ? 1.0 : 0.0, ">=", 1.0);
  r.check("roundtrip", "roundtrip_verified", roundtrip ? 1.0 : 0.0, ">=", 1.0);
  if (!a.certificate.empty()) write_file_atomic(a.certificate, cert);
  std::string csv = "part,size,norm\n";
  for (std::size_t j = 0; j < res.parts.size(); ++j) {
    csv += std::to_string(j) + "," + std::to_string(res.sizes[j]) + "," + fmt(res.per_part_norm[j]) + "\n";
  }
  return finish(r, a.o, csv, out);
}

// ---------------------------------------------------------------------------

struct FactorizeArgs {
  std::string dist;
  double lambda = 1.5;
  double c0 = 10.0;
  std::uint64_t seed = 0;
  std::size_t restarts = 64;
  int threads = 0;
  Output o;
};

int run_factorize(const FactorizeArgs& a, std::ostream& out) {
  guard_output(a.o, {a.dist});
  const auto x = parse_distribution_vec(read_text_file(a.dist), a.dist);
  FactorizationOptions opt;
  opt.c0 = a.c0;
  opt.partition.seed = a.seed;
  opt.partition.restarts = a.restarts;
  opt.partition.threads = resolve_threads(a.threads);
  const auto plan = normcov_factorize(x, a.lambda, opt);

  Report r("factorize", a.seed);
  ojson atoms = ojson::array();
  for (const auto& at : x.atoms()) atoms.push_back({{"x", vec_json(at.x)}, {"p", at.p}});
  r.config() = {{"dist", basename_of(a.dist)}, {"source", atoms}, {"lambda", a.lambda},
                {"c0", a.c0},                  {"seed", a.seed},  {"restarts", a.restarts}};
  auto& m = r.metrics();
  m["k"] = plan.k;
  m["replicated_atoms"] = plan.atoms.size();
  m["parts"] = plan.parts.parts.size();
  m["partition_certified"] = plan.parts.certified;
  m["part_sizes"] = plan.parts.sizes;
  m["scales"] = plan.scales;
  m["operator_norms"] = plan.operator_norms;
  ojson means = ojson::array();
  double worst_op = 0.0, worst_mean = 0.0;
  for (const auto& pm : plan.part_means) {
    means.push_back(vec_json(pm));
    worst_mean = std::max(worst_mean, pm.norm());
  }
  for (double o : plan.operator_norms) worst_op = std::max(worst_op, o);
  m["part_means"] = means;
  m["max_operator_norm"] = worst_op;
  m["max_part_mean_norm"] = worst_mean;
  m["certified"] = plan.certified;
  r.check("partition_certified", "partition_certified", plan.parts.certified ? 1.0 : 0.0, ">=", 1.0);
  r.check("operator_norm_bound", "max_operator_norm", worst_op, "<=", a.c0);
  r.check("part_mean_bound", "max_part_mean_norm", worst_mean, "<=", a.c0);
  return finish(r, a.o, "", out);
}

// ---------------------------------------------------------------------------

struct MinimaxArgs {
  std::string points;
  int threads = 0;  // accepted for uniformity; the solver is sequential
  double trace = 1.0;
  double tol = 1e-6;
  std::size_t max_iter = 100000;
  Output o;
};

int run_minimax(const MinimaxArgs& a, std::ostream& out) {
  guard_output(a.o, {a.points});
  const auto pts = parse_vectors_csv(read_text_file(a.points), a.points);
  const SymmetricPointSet s(pts);
  GameOptions opt;
  opt.tolerance = a.tol;
  opt.max_iterations = static_cast<int>(std::min<std::size_t>(a.max_iter, 1u << 30));
  const auto g = ellipsoid_game(s, a.trace, opt);
  const auto cert = ellipsoid_intersects(s, a.trace, opt);

  Report r("minimax", 0);
  ojson pj = ojson::array();
  for (const auto& x : pts) pj.push_back(vec_json(x));
  r.config() = {{"points", basename_of(a.points)}, {"data", pj}, {"trace", a.trace}, {"tol", a.tol},
                {"max_iter", a.max_iter}};
  auto& m = r.metrics();
  m["primal_value"] = g.primal_value;
  m["dual_value"] = g.dual_value;
  m["duality_gap"] = g.gap;
  m["converged"] = g.converged;
  m["q_star"] = mat_json(g.q_star.q_matrix);
  m["mu_star"] = g.mu_star;
  m["min_cov_norm"] = cert.min_cov_norm;
  m["intersects"] = to_string(cert.verdict);
  m["threshold"] = cert.threshold;
  r.check("duality_gap", "duality_gap", g.gap, "<=", a.tol);
  std::string csv = "index," + std::string("mu") + "\n";
  for (std::size_t i = 0; i < g.mu_star.size(); ++i) csv += std::to_string(i) + "," + fmt(g.mu_star[i]) + "\n";
  return finish(r, a.o, csv, out);
}

// ---------------------------------------------------------------------------

struct SteinhausArgs {
  std::string intervals;
  int threads = 0;
  Output o;
};

ojson intervals_json(const std::vector<Interval>& v) {
  ojson a = ojson::array();
  for (const auto& x : v) {
    auto end = [](double e) -> ojson {
      if (std::isinf(e)) return e > 0 ? "inf" : "-inf";
      return e;
    };
    a.push_back({end(x.lo), end(x.hi)});
  }
  return a;
}

int run_steinhaus(const SteinhausArgs& a, std::ostream& out) {
  guard_output(a.o, {a.intervals});
  const auto iv = parse_intervals(read_text_file(a.intervals), a.intervals);
  const double delta = steinhaus_interval(iv);
  Report r("steinhaus", 0);
  r.config() = {{"intervals", basename_of(a.intervals)}, {"data", intervals_json(iv)}};
  auto& m = r.metrics();
  m["gaussian_measure"] = gaussian_measure(iv);
  m["merged"] = intervals_json(merge_intervals(iv));
  m["minkowski_sum"] = intervals_json(minkowski_sum(iv, iv));
  m["delta"] = std::isinf(delta) ? ojson("inf") : ojson(delta);
  r.check("delta_positive", "delta", delta, ">", 0.0);
  return finish(r, a.o, "", out);
}

// ---------------------------------------------------------------------------

struct EllipsoidArgs {
  std::string q;
  std::size_t samples = 1000000;
  std::uint64_t seed = 9;
  int threads = 0;
  Output o;
};

int run_ellipsoid(const EllipsoidArgs& a, std::ostream& out) {
  guard_output(a.o, {a.q});
  const auto e = EllipsoidSpec::make(parse_matrix_csv(read_text_file(a.q), a.q));
  const auto est = gaussian_measure_ellipsoid(e, a.samples, RandomSource(a.seed), resolve_threads(a.threads));
  Report r("ellipsoid-measure", a.seed);
  r.config() = {{"q", basename_of(a.q)}, {"data", mat_json(e.q_matrix)}, {"samples", a.samples}, {"seed", a.seed}};
  auto& m = r.metrics();
  m["trace"] = e.trace;
  m["estimate"] = est.estimate;
  m["std_error"] = est.std_error;
  m["lower_confidence"] = est.estimate + 3.0 * est.std_error;
  // Trace at most 0.1 guarantees Gaussian measure at least 1/2.
  if (e.trace <= 0.1) r.check("half_measure", "lower_confidence", est.estimate + 3.0 * est.std_error, ">=", 0.5);
  return finish(r, a.o, "", out);
}

// ---------------------------------------------------------------------------

struct OrderStatsArgs {
  std::vector<std::size_t> n{1024};
  std::string family = "gaussian";
  std::size_t reps = 0;
  std::uint64_t seed = 11;
  bool tails = false;
  int threads = 0;
  Output o;
};

int run_orderstats(const OrderStatsArgs& a, std::ostream& out) {
  guard_output(a.o, {});
  const FamilyKind kind = parse_family(a.family);
  Report r("orderstats", a.seed);
  r.config() = {{"n", a.n}, {"family", to_string(kind)}, {"reps", a.reps}, {"seed", a.seed}, {"tails", a.tails}};
  ojson rows = ojson::array();
  std::string csv = "n,reps,moment_sum,stderr,ratio\n";
  std::vector<double> sums;
  for (std::size_t k = 0; k < a.n.size(); ++k) {
    const std::size_t n = a.n[k];
    const auto fam = kind == FamilyKind::kAllGaussian ? ThetaFamily::all_gaussian(n) : ThetaFamily::quantile_strips(n);
    OrderStatsOptions opt;
    opt.reps = a.reps;
    opt.threads = resolve_threads(a.threads);
    opt.tails = a.tails;
    const auto rep = orderstats_moment_sum(fam, RandomSource(a.seed).split(k), opt);
    sums.push_back(rep.moment_sum);
    ojson row = {{"n", n},
                 {"reps", rep.reps},
                 {"moment_sum", rep.moment_sum},
                 {"stderr", rep.std_error},
                 {"ratio", rep.ratio}};
    const auto ag = anchor_growth_check(n);
    row["anchor_growth_slack"] = ag.min_slack;
    r.check("anchor_growth_" + std::to_string(n), "anchor_growth_slack", ag.min_slack, ">=", 0.0);
    if (a.tails) {
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 1; 2 * i <= n; ++i) {
        const double excess = rep.lower_tail[i - 1] - 3.0 * rep.lower_tail_stderr[i - 1] - analytic_tail_integral(n, i);
        worst = std::max(worst, excess);
      }
      row["tail_excess_max"] = worst;
      r.check("tail_domination_" + std::to_string(n), "tail_excess_max", worst, "<=", 0.0);
    }
    rows.push_back(row);
    csv += std::to_string(n) + "," + std::to_string(rep.reps) + "," + fmt(rep.moment_sum) + "," +
           fmt(rep.std_error) + "," + fmt(rep.ratio) + "\n";
  }
  r.metrics()["rows"] = rows;
  if (a.n.size() >= 2 && a.n.front() >= 3) {
    const auto lnln = [](double n) { return std::log(std::log(n)) + 1.0; };
    const double growth = sums.back() / sums.front();
    const double bound = 1.5 * lnln(static_cast<double>(a.n.back())) / lnln(static_cast<double>(a.n.front()));
    r.metrics()["growth"] = growth;
    r.check("loglog_growth", "growth", growth, "<=", bound);
  }
  const auto decay = phi_decay_audit();
  r.metrics()["phi_decay_c"] = decay.c;
  r.metrics()["phi_decay_largest_c"] = decay.largest_c;
  r.check("phi_decay", "phi_decay_largest_c", decay.largest_c, ">=", decay.c);

  // A .csv --out gets the table itself.
  if (!a.o.out.empty() && fs::path(a.o.out).extension() == ".csv") {
    if (!a.o.csv.empty()) write_file_atomic(a.o.csv, csv);
    write_file_atomic(a.o.out, csv);
    return r.exit_code();
  }
  return finish(r, a.o, csv, out);
}

// ---------------------------------------------------------------------------

struct SuiteArgs {
  std::string manifest;
  std::string out_dir;
  int threads = 0;
};

int run_suite(const SuiteArgs& a, std::ostream& out, std::ostream& err) {
  const std::string text = a.manifest.empty() ? default_suite_manifest() : read_text_file(a.manifest);
  ojson man;
  try {
    man = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw InputError(a.manifest.empty() ? "<default manifest>" : a.manifest, 0, e.what());
  }
  if (!man.is_object() || !man.contains("runs") || !man["runs"].is_array()) {
    throw InputError(a.manifest, 0, "manifest needs a \"runs\" array");
  }
  const fs::path dir(a.out_dir);
  const fs::path inputs = dir / "inputs";
  fs::create_directories(inputs);
  if (man.contains("inputs")) {
    for (const auto& [name, content] : man["inputs"].items()) {
      if (name.find('/') != std::string::npos) throw InputError(a.manifest, 0, "input names must be plain files");
      write_file_atomic((inputs / name).string(), content.is_string() ? content.get<std::string>() : content.dump(2) + "\n");
    }
  }
  ojson results = ojson::array();
  ojson seeds = ojson::object();
  int code = 0;
  for (const auto& run : man["runs"]) {
    const std::string name = run.at("name").get<std::string>();
    std::vector<std::string> args;
    for (const auto& x : run.at("args")) {
      std::string s = x.get<std::string>();
      if (s.rfind("@inputs/", 0) == 0) s = (inputs / s.substr(8)).string();
      args.push_back(s);
    }
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--seed") seeds[name] = std::stoull(args[i + 1]);
    }
    args.push_back("--out");
    args.push_back((dir / (name + ".json")).string());
    if (a.threads > 0) {
      args.push_back("--threads");
      args.push_back(std::to_string(a.threads));
    }
    std::ostringstream sink;
    const int rc = gsum::cli::run(args, sink, err);
    out << name << ": " << (rc == 0 ? "pass" : rc == 1 ? "fail" : "error") << "\n";
    results.push_back({{"name", name}, {"exit_code", rc}, {"report", name + ".json"}});
    code = std::max(code, rc == 2 ? 1 : rc);
  }
  ojson summary;
  summary["command"] = "suite";
  summary["manifest"] = man;
  summary["seeds"] = seeds;
  summary["results"] = results;
  summary["provenance"] = {{"version", kVersion}};
  write_file_atomic((dir / "suite.json").string(), summary.dump(2) + "\n");
  return code;
}

}  // namespace

std::string default_suite_manifest() {
  ojson m;
  m["inputs"] = {
      {"uniform2.json", {{"atoms", {{{"x", -0.05}, {"p", 0.5}}, {{"x", 0.05}, {"p", 0.5}}}}}},
      {"uniform3.json",
       {{"atoms", {{{"x", -0.05}, {"p", 1.0 / 3}}, {{"x", 0.0}, {"p", 1.0 / 3}}, {{"x", 0.05}, {"p", 1.0 / 3}}}}}},
      {"delta.json", {{"atoms", {{{"x", 0.0}, {"p", 1.0}}}}}},
      {"vectors.csv",
       "0.9,0\n0.6364,0.6364\n0,0.9\n-0.6364,0.6364\n-0.9,0\n-0.6364,-0.6364\n0,-0.9\n0.6364,-0.6364\n"},
      {"points.csv", "1,0\n-1,0\n0.6,0.8\n-0.6,-0.8\n0,0.5\n0,-0.5\n"},
      {"half_line.json", {{"intervals", ojson::array({ojson::array({"-inf", 0.43072729929545733})})}}},
      {"q.csv", "0.05,0\n0,0.05\n"},
      {"cross.json",
       {{"dim", 2},
        {"atoms",
         {{{"x", {0.5, 0.0}}, {"p", 0.25}},
          {{"x", {-0.5, 0.0}}, {"p", 0.25}},
          {{"x", {0.0, 0.5}}, {"p", 0.25}},
          {{"x", {0.0, -0.5}}, {"p", 0.25}}}}}},
  };
  m["runs"] = {
      {{"name", "couple_uniform2"}, {"args", {"couple", "--dist", "@inputs/uniform2.json", "--samples", "100000", "--seed", "7"}}},
      {{"name", "couple_uniform3"}, {"args", {"couple", "--dist", "@inputs/uniform3.json", "--samples", "100000", "--seed", "8"}}},
      {{"name", "decompose_uniform2"},
       {"args", {"decompose", "--dist", "@inputs/uniform2.json", "--steps", "256", "--samples", "20000",
                 "--compare-steps", "64", "--seed", "42"}}},
      {{"name", "decompose_delta"},
       {"args", {"decompose", "--dist", "@inputs/delta.json", "--steps", "256", "--samples", "20000", "--seed", "43"}}},
      {{"name", "verify_ito_identity"},
       {"args", {"verify-ito", "--fn", "identity", "--steps", "64", "--samples", "20000", "--seed", "5"}}},
      {{"name", "verify_ito_tanh"},
       {"args", {"verify-ito", "--fn", "tanh", "--steps", "64,256", "--samples", "20000", "--seed", "6"}}},
      {{"name", "bessel_d4"}, {"args", {"bessel", "--d", "4", "--samples", "100000", "--seed", "3"}}},
      {{"name", "partition"},
       {"args", {"partition", "--vectors", "@inputs/vectors.csv", "--k", "2", "--strategy", "exhaustive", "--seed", "1"}}},
      {{"name", "factorize"}, {"args", {"factorize", "--dist", "@inputs/cross.json", "--lambda", "1.5", "--seed", "2"}}},
      {{"name", "minimax"}, {"args", {"minimax", "--points", "@inputs/points.csv", "--trace", "1.0", "--tol", "1e-6"}}},
      {{"name", "steinhaus"}, {"args", {"steinhaus", "--intervals", "@inputs/half_line.json"}}},
      {{"name", "ellipsoid_measure"},
       {"args", {"ellipsoid-measure", "--q", "@inputs/q.csv", "--samples", "100000", "--seed", "9"}}},
      {{"name", "orderstats"},
       {"args", {"orderstats", "--n", "128,1024", "--family", "gaussian", "--reps", "100", "--tails", "--seed", "11"}}},
  };
  return m.dump(2) + "\n";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"gsum: couplings of Gaussian sums and their numerical audits", "gsum"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  CoupleArgs couple;
  auto* c = app.add_subcommand("couple", "Build the density coupling of S with a Gaussian and audit it");
  c->add_option("--dist", couple.dist, "Distribution JSON")->required();
  c->add_option("--nu", couple.nu, "Initial shaving parameter")->check(CLI::Range(1e-12, 1.0));
  c->add_option("--kappa-max", couple.kappa_max, "Admission bound on the subgaussian norm")->check(CLI::PositiveNumber);
  c->add_option("--audit-halfwidth", couple.audit_half_width, "Audit grid half width")->check(CLI::Range(4.0, 50.0));
  c->add_option("--audit-step", couple.audit_step, "Audit grid step")->check(CLI::Range(1e-6, 1.0));
  c->add_option("--seed", couple.seed, "Seed");
  add_count(c, "--samples", couple.samples, "Coupled pairs to sample");
  add_threads(c, couple.threads);
  add_output(c, couple.o);

  DecomposeArgs dec;
  auto* d = app.add_subcommand("decompose", "Run the three-Gaussians pipeline for S");
  d->add_option("--dist", dec.dist, "Distribution JSON")->required();
  add_count(d, "--steps", dec.steps, "Time steps");
  add_count(d, "--samples", dec.samples, "Samples");
  add_count(d, "--compare-steps", dec.compare_steps, "Coarser step count for the convergence check");
  add_count(d, "--compare-samples", dec.compare_samples, "Samples for the coarse run (default: --samples)");
  d->add_option("--seed", dec.seed, "Seed");
  add_threads(d, dec.threads);
  add_output(d, dec.o);

  VerifyItoArgs vi;
  auto* v = app.add_subcommand("verify-ito", "Check the two-Gaussian split of a 1-Lipschitz map");
  v->add_option("--fn", vi.fn, "identity or tanh");
  v->add_option("--steps", vi.steps, "Comma separated step counts")->delimiter(',')->check(CLI::PositiveNumber);
  add_count(v, "--samples", vi.samples, "Paths per step count");
  v->add_option("--seed", vi.seed, "Seed");
  add_threads(v, vi.threads);
  add_output(v, vi.o);

  BesselArgs be;
  auto* b = app.add_subcommand("bessel", "Estimate c_d and check the simplex identity");
  add_count(b, "--d", be.d, "Dimension (>= 2)");
  add_count(b, "--samples", be.samples, "Samples");
  b->add_option("--seed", be.seed, "Seed");
  add_threads(b, be.threads);
  add_output(b, be.o);

  PartitionArgs pa;
  auto* p = app.add_subcommand("partition", "Partition vectors into parts of small covariance norm");
  p->add_option("--vectors", pa.vectors, "CSV, one vector per row")->required();
  add_count(p, "--k", pa.k, "Target k");
  p->add_option("--strategy", pa.strategy, "exhaustive or randomized");
  p->add_option("--seed", pa.seed, "Seed for randomized search");
  add_count(p, "--restarts", pa.restarts, "Randomized restarts");
  add_count(p, "--sweeps", pa.sweeps, "Local search sweeps per restart");
  add_count(p, "--min-part-size", pa.min_part_size, "Smallest part size");
  p->add_option("--certificate", pa.certificate, "Write the certificate JSON here");
  add_threads(p, pa.threads);
  add_output(p, pa.o);

  FactorizeArgs fa;
  auto* f = app.add_subcommand("factorize", "Factor a vector distribution through Gaussian maps");
  f->add_option("--dist", fa.dist, "Vector distribution JSON")->required();
  f->add_option("--lambda", fa.lambda, "Norm bound lambda (>= 1)");
  f->add_option("--c0", fa.c0, "Bound on operator norms and part means")->check(CLI::PositiveNumber);
  f->add_option("--seed", fa.seed, "Seed");
  add_count(f, "--restarts", fa.restarts, "Randomized restarts");
  add_threads(f, fa.threads);
  add_output(f, fa.o);

  MinimaxArgs mm;
  auto* g = app.add_subcommand("minimax", "Solve the ellipsoid/covariance game for a symmetric set");
  g->add_option("--points", mm.points, "CSV, one point per row")->required();
  g->add_option("--trace", mm.trace, "Trace tau")->check(CLI::PositiveNumber);
  g->add_option("--tol", mm.tol, "Duality gap tolerance")->check(CLI::Range(1e-14, 1.0));
  add_count(g, "--max-iter", mm.max_iter, "Newton iteration cap");
  add_threads(g, mm.threads);
  add_output(g, mm.o);

  SteinhausArgs st;
  auto* s = app.add_subcommand("steinhaus", "Largest symmetric interval inside A + A");
  s->add_option("--intervals", st.intervals, "Intervals JSON")->required();
  add_threads(s, st.threads);
  add_output(s, st.o);

  EllipsoidArgs el;
  auto* e = app.add_subcommand("ellipsoid-measure", "Gaussian measure of {x : x^T Q x <= 1}");
  e->add_option("--q", el.q, "Q as CSV")->required();
  add_count(e, "--samples", el.samples, "Samples");
  e->add_option("--seed", el.seed, "Seed");
  add_threads(e, el.threads);
  add_output(e, el.o);

  OrderStatsArgs os;
  auto* o = app.add_subcommand("orderstats", "Second moments of sorted samples around quantile anchors");
  o->add_option("--n", os.n, "Comma separated sample sizes")->delimiter(',')->check(CLI::Range(2, 1 << 24));
  o->add_option("--family", os.family, "gaussian or strips");
  add_count(o, "--reps", os.reps, "Repetitions (>= 100; default by n)");
  o->add_option("--seed", os.seed, "Seed");
  o->add_flag("--tails", os.tails, "Compare per-index lower tails with the analytic bound");
  add_threads(o, os.threads);
  add_output(o, os.o);

  SuiteArgs su;
  auto* u = app.add_subcommand("suite", "Run every check listed in a manifest");
  u->add_option("--manifest", su.manifest, "Manifest JSON (default: built in)");
  u->add_option("--out-dir", su.out_dir, "Directory for reports")->required();
  add_threads(u, su.threads);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& ex) {
    const int rc = app.exit(ex, out, err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (c->parsed()) return run_couple(couple, out);
    if (d->parsed()) return run_decompose(dec, out);
    if (v->parsed()) return run_verify_ito(vi, out);
    if (b->parsed()) return run_bessel(be, out);
    if (p->parsed()) return run_partition(pa, out);
    if (f->parsed()) return run_factorize(fa, out);
    if (g->parsed()) return run_minimax(mm, out);
    if (s->parsed()) return run_steinhaus(st, out);
    if (e->parsed()) return run_ellipsoid(el, out);
    if (o->parsed()) return run_orderstats(os, out);
    if (u->parsed()) return run_suite(su, out, err);
  } catch (const UsageError& ex) {
    err << "gsum: " << ex.what() << "\n";
    return 2;
  } catch (const DomainError& ex) {
    err << "gsum: " << ex.what() << "\n";
    return 2;
  } catch (const InternalError& ex) {
    err << "gsum: internal error: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    err << "gsum: " << ex.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace gsum::cli
