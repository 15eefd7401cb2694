#include "gsum/ito.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <string>

#include "gsum/errors.hpp"
#include "gsum/numerics.hpp"
#include "gsum/parallel.hpp"

#include <unsupported/Eigen/FFT>

namespace gsum {
namespace {

constexpr std::size_t kBlock = 256;

const GaussHermite& rule(std::size_t n) {
  thread_local std::unique_ptr<GaussHermite> cached;
  if (!cached || cached->size() != n) cached = std::make_unique<GaussHermite>(n);
  return *cached;
}

// E[F'(x + s Z)] for a tabulated F, exact for its piecewise-constant slope.
double smoothed_slope_exact(const TransportMap1D& f, double s, double x) {
  const auto& k = f.knots();
  const auto& v = f.values();
  const std::size_t n = k.size();
  const double reach = 9.0 * s;
  double acc = 0.0;
  const auto first = std::upper_bound(k.begin(), k.end(), x - reach);
  std::size_t lo = first == k.begin() ? 0 : static_cast<std::size_t>(first - k.begin()) - 1;
  const auto last = std::lower_bound(k.begin(), k.end(), x + reach);
  const std::size_t hi = std::min(n - 1, static_cast<std::size_t>(last - k.begin()));
  for (std::size_t i = lo; i < hi; ++i) {
    const double slope = (v[i + 1] - v[i]) / (k[i + 1] - k[i]);
    const double a = (k[i] - x) / s;
    const double b = (k[i + 1] - x) / s;
    acc += slope * (a > 0.0 ? std_normal_sf(a) - std_normal_sf(b) : std_normal_cdf(b) - std_normal_cdf(a));
  }
  const double left_slope = (v[1] - v[0]) / (k[1] - k[0]);
  const double right_slope = (v[n - 1] - v[n - 2]) / (k[n - 1] - k[n - 2]);
  acc += left_slope * std_normal_cdf((k[lo] - x) / s);
  acc += right_slope * std_normal_sf((k[hi] - x) / s);
  return acc;
}

struct Step {
  double a;
  double c;
};

Step split_coefficients(double gradient, double l) {
  const double a = std::clamp(gradient / l, -1.0, 1.0);
  return {a, std::sqrt(std::max(0.0, 1.0 - a * a))};
}

}  // namespace

void ItoConfig::validate() const {
  if (steps < 16) throw DomainError("ito: steps must be >= 16");
  if (quadrature_nodes < 16) throw DomainError("ito: quadrature_nodes must be >= 16");
  if (!(terminal_clamp > 0.0)) throw DomainError("ito: terminal_clamp must be positive");
  if (table_points < 2) throw DomainError("ito: table_points must be >= 2");
}

HeatValue heat_smoothed(const TransportMap1D& f, double t, double x, std::size_t nodes) {
  if (!(t >= 0.0 && t < 1.0)) {
    throw DomainError("heat_smoothed: t must lie in [0, 1); use F directly at t = 1");
  }
  const GaussHermite& gh = rule(nodes);
  const double s = std::sqrt(1.0 - t);
  double v = 0.0;
  double d = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < gh.size(); ++k) {
    const double w = gh.weights()[k];
    const double u = x + s * gh.nodes()[k];
    v += w * f(u);
    d += w * f.slope(u);
    den += w;
  }
  return {v / den, d / den};
}

// ---------------------------------------------------------------------------

ItoDecomposer::ItoDecomposer(TransportMap1D f, ItoConfig config)
    : f_(std::move(f)), cfg_(config) {
  cfg_.validate();
  l_ = f_.lipschitz_certificate();
  if (!(l_ > 0.0)) throw DomainError("ito: transport map has zero Lipschitz certificate");
  mean_ = f_.mean_under_gamma();
  const double span = 2.0 * cfg_.terminal_clamp;
  dx_ = span / static_cast<double>(cfg_.table_points - 1);
  inv_dx_ = 1.0 / dx_;
  if (f_.is_affine()) {
    affine_a_ = f_.slope(0.0);
    return;
  }
  build_table();
}

// Row j holds E[F'(x + s_j Z)], s_j = sqrt(1 - j/N), on the table grid. The
// slope of F is averaged over fine cells (four per table cell) and each row
// is the exact Gaussian smoothing of that step function, computed as one
// FFT convolution. The last row is the raw slope.
void ItoDecomposer::build_table() {
  const std::size_t n = cfg_.steps;
  const std::size_t p = cfg_.table_points;
  constexpr std::size_t kSub = 4;
  const double delta = dx_ / static_cast<double>(kSub);
  const auto pad_cells = static_cast<std::size_t>(std::ceil(9.0 / dx_)) * kSub;
  const std::size_t cells = 2 * pad_cells + (p - 1) * kSub;
  const double origin = -cfg_.terminal_clamp - static_cast<double>(pad_cells) * delta;

  std::vector<double> m(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    const double a = origin + delta * static_cast<double>(c);
    m[c] = (f_(a + delta) - f_(a)) / delta;
  }
  const double m_left = f_.slope(origin - 1.0);
  const double m_right = f_.slope(origin + delta * static_cast<double>(cells) + 1.0);

  std::size_t len = 1;
  while (len < cells + 2 * pad_cells + 4) len *= 2;
  Eigen::FFT<double> fft;
  std::vector<double> buf(len, 0.0);
  std::copy(m.begin(), m.end(), buf.begin());
  std::vector<std::complex<double>> m_hat;
  fft.fwd(m_hat, buf);

  std::vector<std::complex<double>> k_hat;
  std::vector<double> conv;
  table_.resize(n * p);
  for (std::size_t j = 0; j < n; ++j) {
    double* row = table_.data() + j * p;
    if (j + 1 == n) {
      for (std::size_t k = 0; k < p; ++k) row[k] = f_.slope(-cfg_.terminal_clamp + dx_ * static_cast<double>(k));
      continue;
    }
    const double s = std::sqrt(1.0 - static_cast<double>(j) / static_cast<double>(n));
    // K[d] = P[d delta <= s Z < (d + 1) delta]; out[i] = sum_d K[d] m[i + d],
    // stored as a circular convolution with the reversed kernel.
    const auto reach = static_cast<std::ptrdiff_t>(std::min<double>(
        std::ceil(9.0 * s / delta) + 1.0, static_cast<double>(pad_cells)));
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::ptrdiff_t d = -reach; d < reach; ++d) {
      const double a = static_cast<double>(d) * delta / s;
      const double b = static_cast<double>(d + 1) * delta / s;
      const double w = d >= 0 ? std_normal_sf(a) - std_normal_sf(b) : std_normal_cdf(b) - std_normal_cdf(a);
      const std::ptrdiff_t e = -d;
      buf[static_cast<std::size_t>((e + static_cast<std::ptrdiff_t>(len)) % static_cast<std::ptrdiff_t>(len))] = w;
    }
    fft.fwd(k_hat, buf);
    for (std::size_t q = 0; q < k_hat.size(); ++q) k_hat[q] *= m_hat[q];
    fft.inv(conv, k_hat);
    for (std::size_t k = 0; k < p; ++k) {
      const std::size_t i = pad_cells + k * kSub;
      const double x = -cfg_.terminal_clamp + dx_ * static_cast<double>(k);
      const double lo = origin - x;
      const double hi = origin + delta * static_cast<double>(cells) - x;
      row[k] = conv[i] + m_left * std_normal_cdf(lo / s) + m_right * std_normal_sf(hi / s);
    }
  }
}

double ItoDecomposer::gradient(std::size_t step, double x) const noexcept {
  if (table_.empty()) return affine_a_;
  const std::size_t p = cfg_.table_points;
  const double* row = table_.data() + std::min(step, cfg_.steps - 1) * p;
  const double u = (std::clamp(x, -cfg_.terminal_clamp, cfg_.terminal_clamp) + cfg_.terminal_clamp) * inv_dx_;
  const auto k = std::min(static_cast<std::size_t>(u), p - 2);
  const double w = u - static_cast<double>(k);
  return row[k] + w * (row[k + 1] - row[k]);
}

ItoPath ItoDecomposer::sample(RandomSource& rng) const {
  if (table_.empty()) {
    const Step st = split_coefficients(affine_a_, l_);
    const double h = rng.normal();
    const double w = rng.normal();
    return {h, st.a * h + st.c * w, st.a * h - st.c * w};
  }
  const double sd = 1.0 / std::sqrt(static_cast<double>(cfg_.steps));
  double b = 0.0;
  double x = 0.0;
  double y = 0.0;
  for (std::size_t j = 0; j < cfg_.steps; ++j) {
    const Step st = split_coefficients(gradient(j, b), l_);
    const double db = rng.normal() * sd;
    const double dw = rng.normal() * sd;
    x += st.a * db + st.c * dw;
    y += st.a * db - st.c * dw;
    b += db;
  }
  return {b, x, y};
}

void ItoDecomposer::sample_block(const RandomSource& base, std::uint64_t first,
                                 std::span<ItoPath> out) const {
  const std::size_t n = out.size();
  std::vector<RandomSource> rngs;
  rngs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) rngs.push_back(base.split(first + i));
  if (table_.empty()) {
    for (std::size_t i = 0; i < n; ++i) out[i] = sample(rngs[i]);
    return;
  }
  // All paths of the block advance together so each table row is read from
  // cache once per step.
  const double sd = 1.0 / std::sqrt(static_cast<double>(cfg_.steps));
  std::vector<double> b(n, 0.0);
  std::vector<double> x(n, 0.0);
  std::vector<double> y(n, 0.0);
  for (std::size_t j = 0; j < cfg_.steps; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const Step st = split_coefficients(gradient(j, b[i]), l_);
      const double db = rngs[i].normal() * sd;
      const double dw = rngs[i].normal() * sd;
      x[i] += st.a * db + st.c * dw;
      y[i] += st.a * db - st.c * dw;
      b[i] += db;
    }
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = {b[i], x[i], y[i]};
}

std::vector<ItoPath> ItoDecomposer::sample_many(const RandomSource& base, std::size_t n,
                                                std::size_t threads) const {
  std::vector<ItoPath> out(n);
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  parallel_shards(blocks, threads, [&](std::size_t blk) {
    const std::size_t lo = blk * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    sample_block(base, lo, std::span<ItoPath>(out).subspan(lo, hi - lo));
  });
  return out;
}

double ItoDecomposer::residual(const ItoPath& p) const noexcept {
  return f_(p.h) - mean_ - l_ * (p.x + p.y) / 2.0;
}

ItoPath ito_pair_decomposition(const TransportMap1D& f, const ItoConfig& config,
                               RandomSource& rng) {
  config.validate();
  const double l = f.lipschitz_certificate();
  if (!(l > 0.0)) throw DomainError("ito: transport map has zero Lipschitz certificate");
  const std::size_t n = config.steps;
  const double sd = 1.0 / std::sqrt(static_cast<double>(n));
  double b = 0.0;
  double x = 0.0;
  double y = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double bc = std::clamp(b, -config.terminal_clamp, config.terminal_clamp);
    const double s = std::sqrt(1.0 - static_cast<double>(j) / static_cast<double>(n));
    double g = 0.0;
    if (f.is_affine() || j + 1 == n) {
      g = f.slope(bc);
    } else {
      g = smoothed_slope_exact(f, s, bc);
    }
    const Step st = split_coefficients(g, l);
    const double db = rng.normal() * sd;
    const double dw = rng.normal() * sd;
    x += st.a * db + st.c * dw;
    y += st.a * db - st.c * dw;
    b += db;
  }
  return {b, x, y};
}

// ---------------------------------------------------------------------------

LinearMapSplitter::LinearMapSplitter(const Eigen::MatrixXd& a) : a_(a) {
  if (a.size() == 0) throw DomainError("linear_map_decomposition: empty matrix");
  norm_ = gsum::operator_norm(a);
  if (norm_ > 1.0 + 1e-10) {
    throw DomainError("linear_map_decomposition: operator norm " + std::to_string(norm_) +
                      " exceeds 1");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  u_ = svd.matrixU();
  v_ = svd.matrixV();
  sigma_ = svd.singularValues().cwiseMin(1.0);
}

VectorPair LinearMapSplitter::split(const Eigen::VectorXd& g, RandomSource& rng) const {
  if (g.size() != a_.cols()) throw DomainError("linear_map_decomposition: dimension mismatch");
  const Eigen::VectorXd gp = v_.transpose() * g;
  const auto m = a_.rows();
  Eigen::VectorXd shared = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd fresh(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = i < sigma_.size() ? sigma_[i] : 0.0;
    shared[i] = s * gp[i];
    fresh[i] = std::sqrt(std::max(0.0, 1.0 - s * s)) * rng.normal();
  }
  return {u_ * (shared + fresh), u_ * (shared - fresh)};
}

VectorPair linear_map_decomposition(const Eigen::MatrixXd& a, const Eigen::VectorXd& g,
                                    RandomSource& rng) {
  return LinearMapSplitter(a).split(g, rng);
}

// ---------------------------------------------------------------------------

NormalizationPlan NormalizationPlan::make(double tau1, double tau2, double tau3) {
  const double cap = 1.0 / std::sqrt(2.0);
  for (double t : {tau1, tau2, tau3}) {
    if (!(t > 0.0 && t <= cap * (1.0 + 1e-15))) {
      throw DomainError("normalization: tau = " + std::to_string(t) + " outside (0, 1/sqrt(2)]");
    }
  }
  NormalizationPlan p{tau1, tau2, tau3,
                      0.5 * ((1.0 - tau1 * tau1) + (1.0 - tau2 * tau2) - (1.0 - tau3 * tau3))};
  if (p.a < 0.0 || p.var_w1_own() < 0.0 || p.var_w2_own() < 0.0) {
    throw DomainError("normalization: negative noise variance");
  }
  return p;
}

Triple normalization_triple(const NormalizationPlan& plan, double g1, double g2, double g3,
                            RandomSource& rng) {
  const double w1s = std::sqrt(plan.var_w1_shared()) * rng.normal();
  const double w1o = std::sqrt(plan.var_w1_own()) * rng.normal();
  const double w2o = std::sqrt(plan.var_w2_own()) * rng.normal();
  const double w1 = w1s + w1o;
  const double w2 = -w1s + w2o;
  const double w3 = -(w1 + w2);
  return {plan.tau1 * g1 + w1, plan.tau2 * g2 + w2, plan.tau3 * g3 + w3};
}

// ---------------------------------------------------------------------------

struct ThreeGaussiansPipeline::Built {
  double c;
  int iterations;
  double scale;
  DensityCoupling coupling;
  DensityAudit audit;
  TransportMap1D transport;
};

ThreeGaussiansPipeline::Built ThreeGaussiansPipeline::build(const DiscreteDistribution1D& s,
                                                            const ItoConfig& config,
                                                            const PipelineOptions& opt) {
  config.validate();
  if (std::abs(s.mean()) > opt.coupling.center_tolerance) {
    throw DomainError("three_gaussians: centering gate failed (mean " + std::to_string(s.mean()) +
                      ")");
  }
  double c = 1.0;
  for (int it = 1; it <= opt.max_c_iterations; ++it) {
    const double scale = std::sqrt(2.0) * c * c;
    const DiscreteDistribution1D scaled = s.scaled(scale);
    const double kappa = subgaussian_norm(scaled).kappa;
    if (kappa > opt.coupling.kappa_max) {
      throw DomainError("three_gaussians: admission gate failed: subgaussian norm of S is " +
                        std::to_string(subgaussian_norm(s).kappa) + " > kappa_max/(sqrt(2) C^2) = " +
                        std::to_string(opt.coupling.kappa_max / scale));
    }
    DensityCoupling coupling = build_density_coupling(scaled, opt.coupling);
    TransportMap1D f = bobkov_transport(coupling, opt.bobkov);
    const double slope = f.max_slope();
    if (slope <= c * c) {
      DensityAudit audit = density_ratio_audit(coupling, opt.audit_half_width, opt.audit_step);
      return {c, it, scale, std::move(coupling), std::move(audit), f.with_certificate(c * c)};
    }
    c = std::sqrt(slope) * (1.0 + 1e-9);
    if (c > opt.c_max) {
      throw DomainError("three_gaussians: constant gate failed: C = " + std::to_string(c) +
                        " exceeds c_max = " + std::to_string(opt.c_max));
    }
  }
  throw InternalError("three_gaussians: constant iteration did not settle");
}

ThreeGaussiansPipeline::ThreeGaussiansPipeline(DiscreteDistribution1D s, ItoConfig config,
                                               const PipelineOptions& options)
    : ThreeGaussiansPipeline(s, build(s, config, options), config) {}

ThreeGaussiansPipeline::ThreeGaussiansPipeline(DiscreteDistribution1D s, Built built,
                                               ItoConfig config)
    : source_(std::move(s)),
      c_(built.c),
      c_iterations_(built.iterations),
      scale_(built.scale),
      coupling_(std::move(built.coupling)),
      audit_(std::move(built.audit)),
      ito_(std::move(built.transport), config),
      plan_(NormalizationPlan::make(1.0 / (2.0 * std::sqrt(2.0)), 1.0 / (2.0 * std::sqrt(2.0)),
                                    1.0 / (std::sqrt(2.0) * built.c * built.c))) {}

TripleSample ThreeGaussiansPipeline::finish(const ItoPath& path, RandomSource& rng) const {
  const double t = ito_.map()(path.h);
  const std::vector<double> post = conditional_atom_given_sum(coupling_, t);
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t j = 0;
  for (; j + 1 < post.size(); ++j) {
    acc += post[j];
    if (u < acc) break;
  }
  const CouplingAtom& atom = coupling_.atoms()[j];
  const double s = source_.atoms()[atom.source_index].x;
  const double g = atom.x - t;
  const Triple tr = normalization_triple(plan_, path.x, path.y, g, rng);
  return {tr.g1, tr.g2, tr.g3, s, std::abs(tr.g1 + tr.g2 + tr.g3 - s)};
}

void ThreeGaussiansPipeline::sample_block(const RandomSource& base, std::uint64_t first,
                                          std::span<TripleSample> out) const {
  std::vector<ItoPath> paths(out.size());
  ito_.sample_block(base, first, paths);
  for (std::size_t i = 0; i < out.size(); ++i) {
    RandomSource rng = base.split(first + i).split(1);
    out[i] = finish(paths[i], rng);
  }
}

std::vector<TripleSample> ThreeGaussiansPipeline::sample_many(const RandomSource& base,
                                                              std::size_t n,
                                                              std::size_t threads) const {
  std::vector<TripleSample> out(n);
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  parallel_shards(blocks, threads, [&](std::size_t blk) {
    const std::size_t lo = blk * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    sample_block(base, lo, std::span<TripleSample>(out).subspan(lo, hi - lo));
  });
  return out;
}

}  // namespace gsum
