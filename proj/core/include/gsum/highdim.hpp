#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsum/prob.hpp"
#include "gsum/random.hpp"

namespace gsum {

/// Centered simplex vertices scaled by sqrt(log d), in the Helmert basis of
/// the hyperplane orthogonal to (1, ..., 1).
struct SimplexConstruction {
  std::size_t d = 0;
  std::vector<Eigen::VectorXd> vectors;
  /// Conditional-mean constant; NaN until estimated.
  double c_d;
  double c_d_stderr;
};

/// Throws DomainError for d < 2.
SimplexConstruction simplex_vectors(std::size_t d);

/// argmax_j <z, v_j>, lowest index on ties (0-based).
std::size_t region_index(const Eigen::VectorXd& z, const SimplexConstruction& s);

/// Bonferroni two-sided critical z for `cells` simultaneous 3-sigma checks.
double familywise_z(std::size_t cells, double level = 0.0026997960632601866);

struct CdEstimate {
  double c_d;
  double std_error;
  std::vector<std::uint64_t> region_counts;
  /// Largest |z| of the region frequencies against 1/d.
  double region_max_z;
  /// Per-region mean of <G, v_j> / |v|^2 given region j, with stderr.
  std::vector<double> per_region;
  std::vector<double> per_region_stderr;
  /// Largest |z| of the component of E[G | region] orthogonal to v_region,
  /// measured in the frame where the region's vertex comes first.
  double orthogonal_max_z;
  double critical_z;
};

/// Monte Carlo over nsamples standard Gaussians in the span. Sample i uses
/// rng.split(i / shard) so the result is independent of the thread count.
/// Throws DomainError when nsamples < 10^4.
CdEstimate estimate_cd(const SimplexConstruction& s, std::size_t nsamples,
                       const RandomSource& rng, std::size_t threads = 1);

struct BesselReport {
  std::size_t d;
  std::size_t nsamples;
  double c_d;
  /// Counts of G - Y = c_d v_region over the d vertices.
  std::vector<std::uint64_t> vertex_counts;
  double vertex_max_z;
  /// Mean of Y = G - c_d v_region in the ambient R^d coordinates.
  std::vector<double> residual_mean;
  double residual_max_z;
  /// E|Y|^2.
  double residual_second_moment;
  double critical_z;
  [[nodiscard]] bool vertices_uniform() const noexcept { return vertex_max_z <= critical_z; }
  [[nodiscard]] bool residual_centered() const noexcept { return residual_max_z <= critical_z; }
};

/// Throws DomainError when the construction has no c_d estimate.
BesselReport bessel_identity_check(const SimplexConstruction& s, std::size_t nsamples,
                                   const RandomSource& rng, std::size_t threads = 1);

// ---------------------------------------------------------------------------
// Partitions

enum class SearchStrategy { kExhaustive, kRandomized };

const char* to_string(SearchStrategy s) noexcept;
SearchStrategy parse_strategy(const std::string& name);

struct PartitionResult {
  std::vector<std::vector<std::size_t>> parts;  ///< sorted 0-based indices
  std::vector<double> per_part_norm;
  std::vector<std::size_t> sizes;
  SearchStrategy strategy = SearchStrategy::kExhaustive;
  std::size_t k = 0;
  double norm_bound = 0.0;  ///< 50 / k
  double size_low = 0.0;    ///< k / 3
  double size_high = 0.0;   ///< 5050 k
  bool certified = false;
  std::string failure;      ///< empty unless the search ran out of budget
};

struct PartitionOptions {
  SearchStrategy strategy = SearchStrategy::kExhaustive;
  /// Smallest admissible part size on top of the k/3 certificate.
  std::size_t min_part_size = 1;
  std::size_t restarts = 64;
  std::size_t sweeps = 200;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// |(1/|T|) sum_{i in T} v_i v_i^T|, summed in index order.
double part_norm(const std::vector<Eigen::VectorXd>& v, const std::vector<std::size_t>& part);

/// Splits the m vectors into floor(m/k) parts minimizing the largest part
/// norm. Exhaustive search enumerates restricted growth strings (ties go to
/// the first in that order) and is limited to m <= 12; the randomized search
/// is restarted local search.
///
/// Throws DomainError when m < k, some |v_i| > 1, or (1/m) sum v v^T is not
/// below I/k. A search that finds no certified partition returns
/// certified = false with a failure note.
PartitionResult mss_partition(const std::vector<Eigen::VectorXd>& v, std::size_t k,
                              const PartitionOptions& options = {});

/// Recomputes every stored norm and certificate; true only on bit-exact
/// agreement.
bool verify_partition(const std::vector<Eigen::VectorXd>& v, const PartitionResult& r);

// ---------------------------------------------------------------------------
// Factorization

struct FactorizationOptions {
  double c0 = 10.0;
  PartitionOptions partition{};
};

struct FactorizationPlan {
  double lambda = 0.0;
  std::size_t k = 0;
  /// Atoms after replication to uniform weights, before division by lambda.
  std::vector<Eigen::VectorXd> atoms;
  PartitionResult parts;
  /// Columns v'_i of part j; F_j = raw_columns[j] / scales[j].
  std::vector<Eigen::MatrixXd> raw_columns;
  std::vector<double> scales;  ///< sqrt(log d_j)
  /// column[j][c] = atom index placed in column c of part j.
  std::vector<std::vector<std::size_t>> columns;
  std::vector<double> operator_norms;
  std::vector<Eigen::VectorXd> part_means;
  double c0 = 0.0;
  bool certified = false;

  [[nodiscard]] Eigen::MatrixXd map(std::size_t j) const;
  /// F_j x, evaluated as raw * (x / scale).
  [[nodiscard]] Eigen::VectorXd apply(std::size_t j, const Eigen::VectorXd& x) const;
};

/// Throws DomainError when an atom has norm above lambda, the covariance
/// exceeds lambda^2 e^{-lambda^2}, lambda < 1, or the weights are not
/// rational with denominator <= 4096.
FactorizationPlan normcov_factorize(const DiscreteDistributionVec& x, double lambda,
                                    const FactorizationOptions& options = {});

}  // namespace gsum
