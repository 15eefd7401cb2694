#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "gsum/prob.hpp"
#include "gsum/random.hpp"
#include "gsum/transport.hpp"

namespace gsum {

struct CouplingOptions {
  /// Initial mass-shaving parameter; halved until every g_{j,1} is positive.
  double nu = 0.1;
  /// Admission threshold on the subgaussian norm of the source.
  double kappa_max = 0.05;
  double center_tolerance = 1e-10;
  /// y0 scan over [-1, 1] followed by bisection.
  double scan_step = 1e-3;
  double bisect_tolerance = 1e-12;
  /// Positivity check of g_{j,1} on [-w, w] with the given step.
  double positivity_halfwidth = 8.0;
  double positivity_step = 1e-3;
  int max_nu_halvings = 30;
};

enum class BalanceCase { kA, kB };

/// One bookkeeping atom of the coupling. In the split case the atom sitting
/// at y0 appears twice, once on each side of the balance.
struct CouplingAtom {
  double x;
  double p;
  /// Index of the atom in the source distribution.
  std::size_t source_index;
  /// Counted among the I_{y0} atoms at or below y0 (these draw W_+ when B = 0).
  bool lower;
  double alpha;
  double beta_minus;
  double beta_plus;
};

struct CaseBSplit {
  std::size_t atom_index;  ///< source atom at y0
  double p_prime;          ///< mass kept on the lower side
};

/// Coupling of a centered discrete S with a standard Gaussian G such that
/// S + G has a density pinched between multiples of phi(x - y0). Immutable.
class DensityCoupling {
 public:
  [[nodiscard]] const DiscreteDistribution1D& source() const noexcept { return source_; }
  [[nodiscard]] double y0() const noexcept { return y0_; }
  [[nodiscard]] double nu() const noexcept { return nu_; }
  [[nodiscard]] int nu_halvings() const noexcept { return nu_halvings_; }
  [[nodiscard]] BalanceCase balance_case() const noexcept { return case_; }
  [[nodiscard]] const std::optional<CaseBSplit>& case_b_split() const noexcept { return split_; }
  [[nodiscard]] const std::vector<CouplingAtom>& atoms() const noexcept { return atoms_; }
  [[nodiscard]] double gamma_minus() const noexcept { return gamma_minus_; }
  [[nodiscard]] double gamma_plus() const noexcept { return gamma_plus_; }
  /// Number of bookkeeping atoms on the lower side.
  [[nodiscard]] std::size_t i_y0() const noexcept { return i_y0_; }
  /// Sum_j p_j beta_{j,+} - Sum_{lower j} p_j (1 - alpha_j).
  [[nodiscard]] double balance_residual() const noexcept;

  /// Density of S + G as signed Gaussian pieces c * phi(x - m) on [lo, hi).
  struct Piece {
    double c;
    double m;
    double lo;
    double hi;
  };
  [[nodiscard]] const std::vector<Piece>& pieces() const noexcept { return pieces_; }

 private:
  friend DensityCoupling build_density_coupling(const DiscreteDistribution1D&,
                                                const CouplingOptions&);
  explicit DensityCoupling(DiscreteDistribution1D source) : source_(std::move(source)) {}

  DiscreteDistribution1D source_;
  double y0_ = 0.0;
  double nu_ = 0.0;
  int nu_halvings_ = 0;
  BalanceCase case_ = BalanceCase::kA;
  std::optional<CaseBSplit> split_;
  std::vector<CouplingAtom> atoms_;
  double gamma_minus_ = 0.0;
  double gamma_plus_ = 0.0;
  std::size_t i_y0_ = 0;
  std::vector<Piece> pieces_;
};

/// Builds the coupling: admission checks, nu halving, smallest balancing y0
/// (scan + bisection, or the split case at an atom).
///
/// Throws DomainError if S is not centered or exceeds kappa_max, and
/// InternalError if no y0 balances or nu cannot be made small enough.
DensityCoupling build_density_coupling(const DiscreteDistribution1D& s,
                                       const CouplingOptions& options = {});

/// Balance residual of the unsplit construction at an arbitrary y0 (atoms
/// <= y0 counted as lower). Exposed for diagnostics and tests.
double balance_residual_at(const DiscreteDistribution1D& s, double nu, double y0);

struct ComponentDensities {
  double g0;
  double g1;
};

/// g_{j,0}(x) and g_{j,1}(x) for bookkeeping atom j; g0 + g1 = phi(x - x_j).
ComponentDensities component_densities(const DensityCoupling& c, std::size_t j, double x);

/// Density of S + G, assembled from the three mixture terms.
double sum_density(const DensityCoupling& c, double x);
/// P[S + G <= x] in closed form.
double sum_cdf(const DensityCoupling& c, double x);
/// P[S + G > x] in closed form.
double sum_sf(const DensityCoupling& c, double x);
/// Inverse of sum_cdf; p in (0, 1).
double sum_quantile(const DensityCoupling& c, double p);

/// Density of G: sum_j p_j g_{j,0}(x + x_j) plus the W_-/W_+ mixture. Equals
/// phi(x) when the balance equation holds.
double gaussian_marginal_density(const DensityCoupling& c, double x);

struct DensityAudit {
  double c_low;
  double c_high;
  std::vector<double> grid;
  double y0;
};

/// min and max of f(x) / phi(x - y0) over the grid on [y0 - w, y0 + w].
/// Throws DomainError when half_width < 4 or grid_step <= 0, InternalError
/// when f is not positive somewhere on the grid.
DensityAudit density_ratio_audit(const DensityCoupling& c, double half_width = 6.0,
                                 double grid_step = 1e-3);

struct CoupledPair {
  double s;
  double g;
  std::size_t atom;  ///< bookkeeping atom index
  bool b;            ///< true when G was drawn from V_j
};

/// Exact joint draw of (S, G). Throws InternalError if a rejection loop
/// exceeds its cap.
CoupledPair sample_coupled_pair(const DensityCoupling& c, RandomSource& rng);

/// Posterior over bookkeeping atoms given S + G = t. Throws DomainError when
/// f(t) = 0.
std::vector<double> conditional_atom_given_sum(const DensityCoupling& c, double t);

struct BobkovOptions {
  double z_max = 9.0;
  std::size_t knots = 9217;  // step 1/512 on [-9, 9]
  double root_tolerance = 1e-13;
};

/// Monotone map F = Q_f o Phi pushing N(0,1) to f dx, tabulated on knots;
/// exact affine map when S is a point mass.
TransportMap1D bobkov_transport(const DensityCoupling& c, const BobkovOptions& options = {});

struct QuantizedDistribution {
  DiscreteDistribution1D dist;
  double w1_error;
};

/// Reduces S to at most `max_atoms` atoms placed at the quantiles
/// (k - 1/2)/K, recentered to mean zero; reports W1 to the input.
QuantizedDistribution quantize_distribution(const DiscreteDistribution1D& s,
                                            std::size_t max_atoms = 512);

}  // namespace gsum
