#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stochlab/geometry.hpp"
#include "stochlab/nonlinearity.hpp"
#include "stochlab/numerics.hpp"
#include "stochlab/parabolic.hpp"

namespace stochlab {

/// Result of checking L_h W − F(W) >= −tol cell by cell (interior cells only).
struct SignCheck {
  bool passed = true;
  std::size_t worst_cell = 0;
  double worst_radius = 0.0;
  double worst_defect = 0.0;  // most negative (L_h W − F(W) + tol); 0 when passed
  double tolerance = 0.0;     // largest tolerance used at any cell
  std::string note;
};

/// Cell values W on a grid with Dirichlet value `boundary` at r = R.
struct EllipticProfile {
  RadialGrid grid;
  std::vector<double> values;
  double boundary = 0.0;
  /// max_i |(L_h W)_i − ψ(W_i)| / (1 + T_in/|K_i| + T_out/|K_i|)
  double residual = 0.0;
  int iterations = 0;
  SignCheck check;

  double sup() const;
  double at(double r) const { return grid.interpolate(values, r); }
};

/// (L_h W)_i, using `boundary` beyond the last cell.
std::vector<double> apply_laplacian(const RadialGrid& grid, const std::vector<double>& w, double boundary);

/// Jacobi-scaled residual of L_h W = F(W).
double scaled_residual(const RadialGrid& grid, const std::vector<double>& w, double boundary,
                       const std::function<double(double)>& rhs);

/// Discrete ΔW = ψ(W) on the ball, W(R) = h. Newton from the supersolution W ≡ h;
/// iterates are kept in [0, h]. Throws std::invalid_argument for h outside [0, a),
/// NumericalError when Newton stalls.
EllipticProfile solve_semilinear(const ModelManifold& m, const Nonlinearity& n, const RadialGrid& grid, double h);

/// Sweeps (K − L_h) W⁺ = K W − ψ(W) downward from `upper`, K = max ψ' on the
/// bracket. Checks the bracket first (sub/super residual signs on interior
/// cells, lower <= upper) and keeps checking it; any violation throws.
/// The Dirichlet value is upper.boundary.
EllipticProfile monotone_iteration(const ModelManifold& m, const Nonlinearity& n, const RadialGrid& grid,
                                   const EllipticProfile& lower, const EllipticProfile& upper,
                                   double tol = 1e-12, int max_iter = 200000);

/// Same sweep for the linear equation Δv = λv.
EllipticProfile linear_monotone_iteration(const RadialGrid& grid, double lambda, const EllipticProfile& lower,
                                          const EllipticProfile& upper, double tol = 1e-12,
                                          int max_iter = 200000);

/// Constant profile (W ≡ value, boundary = value) on a grid.
EllipticProfile constant_profile(const RadialGrid& grid, double value);

enum class ExhaustionVerdict { Nontrivial, Trivial, Undetermined };

std::string to_string(ExhaustionVerdict v);

struct EllipticSchedule {
  std::vector<double> radii = {8.0, 16.0, 32.0};
  double spacing = 1.0 / 16.0;
  std::vector<double> probe_radii = {0.0, 0.5, 1.0, 1.5, 2.0};
  double cauchy_tol = 1e-3;     // relative change across a doubling
  double decay_factor = 2.0;    // per doubling, for Trivial
  double floor = 1e-8;          // relative to h, for Nontrivial
  bool parallel = true;
};

struct EllipticExhaustion {
  std::vector<double> radii;
  std::vector<EllipticProfile> profiles;
  std::vector<double> probe_radii;
  std::vector<std::vector<double>> probe_values;
  std::vector<double> relative_changes;
  std::vector<double> decay_ratios;
  bool monotone_in_radius = true;  // W_R nonincreasing in R on common cells
  double worst_order_violation = 0.0;
  ExhaustionVerdict verdict = ExhaustionVerdict::Undetermined;
};

EllipticExhaustion exhaustion_limit(const ModelManifold& m, const Nonlinearity& n, double h,
                                    const EllipticSchedule& schedule = {});

enum class ShootingVerdict { Bounded, Unbounded, Undetermined };

std::string to_string(ShootingVerdict v);

struct ShootingConfig {
  DoublingPolicy policy;
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  double r_start = 1e-4;          // series start v = 1 + λr²/(2N)
  int samples_per_doubling = 64;  // trajectory resolution
};

struct ShootingResult {
  double lambda = 1.0;
  std::vector<double> radii;
  std::vector<double> values;
  std::vector<double> slopes;
  IntegralEstimate estimate;  // doubling test on v(R_k)
  ShootingVerdict verdict = ShootingVerdict::Undetermined;
  std::string note;
  /// sup v: the tail limit when Bounded, the last value otherwise.
  double sup() const;
};

/// v'' + (N−1)(w'/w) v' = λ v, v(0) = 1, v'(0) = 0, up to r_max (default: the
/// policy's last radius, clipped to the warp's range). Stops once v passes the
/// divergence cap. Throws NumericalError when the stiff integrator gives up.
ShootingResult linear_shooting(const ModelManifold& m, double lambda, std::optional<double> r_max = std::nullopt,
                               const ShootingConfig& cfg = {});

/// v at the given increasing radii (same integrator as linear_shooting).
std::vector<double> shoot_at(const ModelManifold& m, double lambda, const std::vector<double>& radii,
                             const ShootingConfig& cfg = {});

/// v / sup v on the grid as a candidate subsolution of ΔW = ψ(W), with the
/// sign check L_h ṽ − ψ(ṽ) >= −tol on interior cells. Throws
/// std::invalid_argument unless the shot is Bounded.
EllipticProfile subsolution_from_linear(const ModelManifold& m, const Nonlinearity& n, const RadialGrid& grid,
                                        const ShootingResult& shot, double tol = 1e-6);

/// Discrete weights for ∫₀ᵀ (·) ê(s) ds on a field's time grid:
/// b_1 = 1, b_{k+1} = b_k / (1 + dt_k), ê_k = b_k dt_k / Σ b_j dt_j.
/// Steps k with t_k > T get weight 0.
std::vector<double> duality_weights(const std::vector<double>& times, double T);

/// W̲ = Σ_k ê_k [φ(u*_k) − φ(u_k)] with the interior sign check
/// L_h W̲ >= ψ(W̲) − dt_max ψ(W̲) − roundoff. Throws std::invalid_argument on
/// mismatched grids or times, or when u* >= u fails beyond `order_tol`.
EllipticProfile duality_subsolution(const SpaceTimeField& u_star, const SpaceTimeField& u, const Nonlinearity& n,
                                    double T, double order_tol = 1e-9);

struct ConstantSplitting {
  EllipticProfile profile;
  double lambda_eff = 0.0;  // 1 / φ'(c)
};

/// V = Σ_k ê_k [φ(u*_k) − φ(c)] and the check L_h V >= λ_eff V − dt_max λ_eff V⁺ − roundoff.
ConstantSplitting constant_splitting_subsolution(const SpaceTimeField& u_star, double c, const Nonlinearity& n,
                                                 double T);

/// Boundary data of the constant-splitting run: ψ(min(e^{t/2}/2, 1) · w_sup).
double splitting_boundary(const Nonlinearity& n, double w_sup, double t);

}  // namespace stochlab
