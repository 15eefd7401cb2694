#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gsum/coupling1d.hpp"
#include "gsum/prob.hpp"
#include "gsum/random.hpp"
#include "gsum/transport.hpp"

namespace gsum {

struct ItoConfig {
  std::size_t steps = 4096;
  /// Gauss-Hermite order of the heat smoothing.
  std::size_t quadrature_nodes = 64;
  /// Brownian positions are clamped to [-c, c] before gradient lookup.
  double terminal_clamp = 8.0;
  /// Points per time row of the precomputed gradient table.
  std::size_t table_points = 2049;

  /// Throws DomainError unless steps >= 16, quadrature_nodes >= 16,
  /// terminal_clamp > 0 and table_points >= 2.
  void validate() const;
};

struct HeatValue {
  double value;
  double gradient;
};

/// E[F(x + sqrt(1-t) Z)] and its x-derivative by Gauss-Hermite quadrature.
/// Throws DomainError when t is outside [0, 1).
HeatValue heat_smoothed(const TransportMap1D& f, double t, double x,
                        std::size_t quadrature_nodes = 64);

struct ItoPath {
  double h;  ///< Brownian endpoint B_1
  double x;
  double y;
};

/// Splits F(B_1) - E F into L (x + y) / 2 along a Brownian path, with x and
/// y each a sum of N independent N(0, 1/N) increments.
///
/// The gradient of the heat-smoothed map is tabulated once per time row on
/// [-clamp, clamp] by exact Gaussian smoothing of the slope of F (quadrature
/// on a slope with jumps leaves a bias that does not shrink with N); the last
/// row uses the raw slope. Affine maps skip
/// the path simulation (the increments are then deterministic multiples of
/// two Gaussians, so the sums are drawn directly).
class ItoDecomposer {
 public:
  ItoDecomposer(TransportMap1D f, ItoConfig config);

  [[nodiscard]] const TransportMap1D& map() const noexcept { return f_; }
  [[nodiscard]] const ItoConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] double lipschitz() const noexcept { return l_; }
  [[nodiscard]] double mean() const noexcept { return mean_; }

  /// Gradient of P_{1 - j/N} F at x, from the table.
  [[nodiscard]] double gradient(std::size_t step, double x) const noexcept;

  ItoPath sample(RandomSource& rng) const;
  /// Path i of the output uses base.split(first + i).
  void sample_block(const RandomSource& base, std::uint64_t first, std::span<ItoPath> out) const;
  /// n paths, sharded over `threads`; result independent of the thread count.
  [[nodiscard]] std::vector<ItoPath> sample_many(const RandomSource& base, std::size_t n,
                                                 std::size_t threads = 1) const;

  /// F(h) - E F - L (x + y) / 2.
  [[nodiscard]] double residual(const ItoPath& p) const noexcept;

 private:
  void build_table();

  TransportMap1D f_;
  ItoConfig cfg_;
  double l_;
  double mean_;
  double dx_;
  double inv_dx_;
  double affine_a_ = 0.0;
  std::vector<double> table_;  // steps x table_points, row-major
};

/// One path with gradients computed directly from the knots of F (no table).
ItoPath ito_pair_decomposition(const TransportMap1D& f, const ItoConfig& config,
                               RandomSource& rng);

struct VectorPair {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

/// Precomputed SVD for repeated splits of A g.
class LinearMapSplitter {
 public:
  /// Throws DomainError when the operator norm of A exceeds 1 + 1e-10.
  explicit LinearMapSplitter(const Eigen::MatrixXd& a);

  [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return a_; }
  [[nodiscard]] double operator_norm() const noexcept { return norm_; }
  [[nodiscard]] const Eigen::VectorXd& singular_values() const noexcept { return sigma_; }

  /// (x + y) / 2 = A g; x and y are N(0, I) when g is. Draws rows(A) fresh
  /// normals from rng.
  VectorPair split(const Eigen::VectorXd& g, RandomSource& rng) const;

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd u_;
  Eigen::MatrixXd v_;
  Eigen::VectorXd sigma_;
  double norm_;
};

VectorPair linear_map_decomposition(const Eigen::MatrixXd& a, const Eigen::VectorXd& g,
                                    RandomSource& rng);

struct NormalizationPlan {
  double tau1;
  double tau2;
  double tau3;
  double a;

  /// Throws DomainError unless every tau lies in (0, 1/sqrt 2] and the three
  /// noise variances are nonnegative.
  static NormalizationPlan make(double tau1, double tau2, double tau3);
  [[nodiscard]] double var_w1_shared() const noexcept { return a; }
  [[nodiscard]] double var_w1_own() const noexcept { return (1.0 - tau1 * tau1) - a; }
  [[nodiscard]] double var_w2_own() const noexcept { return (1.0 - tau2 * tau2) - a; }
};

struct Triple {
  double g1;
  double g2;
  double g3;
};

/// G_i = tau_i g_i + W_i with W_1 + W_2 + W_3 = 0; draws three normals.
Triple normalization_triple(const NormalizationPlan& plan, double g1, double g2, double g3,
                            RandomSource& rng);

struct TripleSample {
  double g1;
  double g2;
  double g3;
  double s;
  double reconstruction_error;  ///< |g1 + g2 + g3 - s|
};

struct PipelineOptions {
  CouplingOptions coupling{.kappa_max = 0.1};
  BobkovOptions bobkov{};
  double audit_half_width = 6.0;
  double audit_step = 1e-3;
  /// Upper limit for the pipeline constant.
  double c_max = 8.0;
  int max_c_iterations = 20;
};

/// End-to-end sampler of (G1, G2, G3, S) with S = G1 + G2 + G3 up to the
/// discretization of the stochastic integral.
///
/// The constant C is the smallest value >= 1 found by iterating
/// C^2 <- max slope of the transport built for sqrt(2) C^2 S, so that the
/// map is C^2-Lipschitz. The density-ratio audit of the final coupling is
/// kept for reporting.
class ThreeGaussiansPipeline {
 public:
  /// Throws DomainError naming the failed gate when S is not centered, when
  /// sqrt(2) C^2 S exceeds the admission threshold or when C would exceed
  /// c_max.
  ThreeGaussiansPipeline(DiscreteDistribution1D s, ItoConfig config,
                         const PipelineOptions& options = {});

  [[nodiscard]] const DiscreteDistribution1D& source() const noexcept { return source_; }
  [[nodiscard]] double c_emp() const noexcept { return c_; }
  [[nodiscard]] int c_iterations() const noexcept { return c_iterations_; }
  [[nodiscard]] double scale() const noexcept { return scale_; }
  [[nodiscard]] const DensityCoupling& coupling() const noexcept { return coupling_; }
  [[nodiscard]] const DensityAudit& audit() const noexcept { return audit_; }
  [[nodiscard]] const TransportMap1D& transport() const noexcept { return ito_.map(); }
  [[nodiscard]] const ItoDecomposer& decomposer() const noexcept { return ito_; }
  [[nodiscard]] const NormalizationPlan& plan() const noexcept { return plan_; }

  /// Sample i of the output uses base.split(first + i).
  void sample_block(const RandomSource& base, std::uint64_t first,
                    std::span<TripleSample> out) const;
  [[nodiscard]] std::vector<TripleSample> sample_many(const RandomSource& base, std::size_t n,
                                                      std::size_t threads = 1) const;

 private:
  struct Built;
  ThreeGaussiansPipeline(DiscreteDistribution1D s, Built built, ItoConfig config);
  static Built build(const DiscreteDistribution1D& s, const ItoConfig& config,
                     const PipelineOptions& options);

  TripleSample finish(const ItoPath& path, RandomSource& rng) const;

  DiscreteDistribution1D source_;
  double c_;
  int c_iterations_;
  double scale_;
  DensityCoupling coupling_;
  DensityAudit audit_;
  ItoDecomposer ito_;
  NormalizationPlan plan_;
};

}  // namespace gsum
