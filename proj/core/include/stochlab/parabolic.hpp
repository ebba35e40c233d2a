#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stochlab/clock.hpp"
#include "stochlab/geometry.hpp"
#include "stochlab/nonlinearity.hpp"

namespace stochlab {

using RadialFunction = std::function<double(double)>;
using TimeFunction = std::function<double(double)>;

/// How the ε ↓ 0 limit of the lifted ladder is produced.
///   Last:       smallest-ε solve
///   Richardson: first-order extrapolation from the two smallest ε, clamped at 0
///   Direct:     an extra ε = 0 solve (the ladder then only certifies monotonicity)
enum class Extrapolation { Last, Richardson, Direct };

std::string to_string(Extrapolation e);

struct SolverConfig {
  // time stepping
  double dt_initial = 1e-3;
  double dt_growth = 1.05;
  double dt_max = 2e-2;
  double dt_min = 1e-12;
  // Newton on v = φ(u)
  double newton_tol = 1e-12;
  int newton_max_iter = 60;
  // lifting ladder ε_j; empty means no ladder
  std::vector<double> lifting = {0.1, 0.05, 0.025};
  Extrapolation extrapolation = Extrapolation::Direct;
  // exhaustion
  std::vector<double> exhaustion_radii = {8.0, 16.0, 32.0};
  double spacing = 1.0 / 16.0;
  std::vector<double> probe_radii = {0.0, 0.5, 1.0, 1.5, 2.0};
  double cauchy_tol = 1e-3;
  /// Used in place of an infinite horizon.
  double horizon_cap = 10.0;
  /// Witness runs only: switch the boundary to 0 after this time.
  std::optional<double> restart_at;
  /// Run the exhaustion levels on separate threads.
  bool parallel = true;

  /// Throws std::invalid_argument on nonpositive tolerances or non-monotone schedules.
  void validate() const;
  static SolverConfig with_lifting(std::vector<double> eps, Extrapolation e);
  /// 0.1 · 2^{-j}, j = 0..levels-1.
  static std::vector<double> default_ladder(int levels);
};

struct SolveDiagnostics {
  int steps = 0;
  int max_newton_iterations = 0;
  int dt_retries = 0;
  bool ladder_monotone = true;      // lifted solves nonincreasing as ε decreases
  double ladder_worst_violation = 0.0;
  bool horizon_truncated = false;
};

/// u[k][i] on cell centres at times t_k, with the boundary trace and datum.
struct SpaceTimeField {
  RadialGrid grid;
  std::vector<double> times;
  std::vector<std::vector<double>> values;
  std::vector<double> boundary_trace;
  std::vector<double> datum;
  double lifting = 0.0;  // ε the stored values correspond to
  /// Inward boundary flux integrated over (t_{k-1}, t_k], divided by the ball
  /// volume; inflow[0] = 0. Empty for restricted or extrapolated fields.
  std::vector<double> inflow;
  SolveDiagnostics diagnostics;

  double horizon() const { return times.back(); }
  std::size_t steps() const { return times.size() - 1; }
  /// Index of the stored time closest to t.
  std::size_t time_index(double t) const;
  double sup(std::size_t k) const;
  double sup() const;
  /// Linear interpolation in r (between centres) and t (between steps).
  double at(double t, double r) const;
};

/// Backward Euler, cell-centred finite volumes, Newton in v = φ(u).
SpaceTimeField solve_dirichlet(const ModelManifold& m, const Nonlinearity& n, const RadialGrid& grid,
                               const RadialFunction& u0, const TimeFunction& g, double horizon,
                               const SolverConfig& cfg = {});

/// Single solve with lifting ε (data u0 + ε, g + ε), no ladder.
SpaceTimeField solve_lifted(const ModelManifold& m, const Nonlinearity& n, const RadialGrid& grid,
                            const RadialFunction& u0, const TimeFunction& g, double horizon, double epsilon,
                            const SolverConfig& cfg = {});

enum class ExhaustionStatus { Converged, Decaying, Undetermined };

std::string to_string(ExhaustionStatus s);

struct ExhaustionResult {
  std::vector<double> radii;
  std::vector<SpaceTimeField> levels;
  /// probe_values[j][p]: level j at probe radius p, final time.
  std::vector<std::vector<double>> probe_values;
  std::vector<double> probe_radii;
  /// max relative change between consecutive levels on the probe set
  std::vector<double> relative_changes;
  /// min over probes of |u_{j}| / |u_{j+1}| (decay factor per doubling)
  std::vector<double> decay_ratios;
  /// true when the levels are ordered in R the way comparison requires
  bool monotone_in_radius = true;
  double worst_order_violation = 0.0;
  ExhaustionStatus status = ExhaustionStatus::Undetermined;
  /// Limit candidate on r <= radii[0] / 2.
  std::optional<SpaceTimeField> limit;
};

/// Zero Dirichlet data on the exhaustion schedule.
ExhaustionResult minimal_solution(const ModelManifold& m, const Nonlinearity& n, const RadialFunction& u0,
                                  double horizon, const SolverConfig& cfg = {});

/// Boundary data ψ(f(t) ∨ φ(‖u0‖∞)) on the exhaustion schedule.
ExhaustionResult witness_solution(const ModelManifold& m, const Nonlinearity& n, const RadialFunction& u0,
                                  double horizon, const ClockSpec& clock, const SolverConfig& cfg = {});

/// Generic exhaustion driver: same spacing and time grid at every radius.
ExhaustionResult exhaust(const ModelManifold& m, const Nonlinearity& n, const RadialFunction& u0,
                         const TimeFunction& g, double horizon, const SolverConfig& cfg, int direction);

struct GapReport {
  double time = 0.0;
  double datum_sup = 0.0;
  double witness_sup = 0.0;         // ‖u1(S)‖∞ on the probe set
  double excess = 0.0;              // ‖u1(S)‖∞ − ‖u0‖∞
  double difference = 0.0;          // ‖u1(S) − u2(S)‖∞ on the probe set
  double tolerance = 0.0;
  bool witnessed = false;
};

/// Fields must share their grid; probes are evaluated by interpolation.
GapReport nonuniqueness_gap(const SpaceTimeField& minimal, const SpaceTimeField& witness, double time,
                            std::span<const double> probe_radii, double tolerance);

/// [(1−m) t]^{1/(1−m)} W^{1/m}; requires a power nonlinearity with m < 1.
std::vector<double> separable_solution(const Nonlinearity& n, std::span<const double> W, double t);

/// Per-cell residual of u_t − Δφ(u) for one backward-Euler step on `grid`
/// (Δ by the finite-volume operator). The last cell uses `boundary_value`.
std::vector<double> pde_residual(const RadialGrid& grid, const Nonlinearity& n, std::span<const double> u_prev,
                                 std::span<const double> u_next, double dt, double boundary_value);

struct MassSeries {
  std::vector<double> times;
  /// Masses and fluxes in units of exp(log_scale) (the ball volume), so they
  /// stay finite on fast-growing warps.
  double log_scale = 0.0;
  std::vector<double> mass;
  std::vector<double> boundary_flux_integral;  // ∫₀ᵗ inward flux
  std::vector<double> balance_residual;        // relative
  double max_balance_residual() const;
};

MassSeries mass_series(const SpaceTimeField& field);

struct WeakTestFunction {
  double radius = 1.0;   // ρ: η(r) = (1 − r²/ρ²)⁴ on r < ρ
  int time_power = 3;    // θ(t) = (1 − t/T)^p
};

struct WeakFormReport {
  std::vector<WeakTestFunction> tests;
  std::vector<double> residuals;
  std::vector<double> c2_norms;  // ‖ξ‖C² including support measure
  double max_residual = 0.0;
  double h = 0.0;
  double dt = 0.0;
  double u_sup = 0.0;
  /// max over tests of residual / (‖u‖∞ ‖ξ‖C²)
  double max_normalized() const;
};

/// Standard bump family: ρ ∈ {R/8, R/4, R/2} capped at 4, p ∈ {3, 4}.
std::vector<WeakTestFunction> standard_test_family(double radius);

WeakFormReport weak_residual(const SpaceTimeField& field, const ModelManifold& m, const Nonlinearity& n,
                             const std::vector<WeakTestFunction>& tests);

/// Restriction of a field to its first `cells` cells (the grid is rebuilt on m).
SpaceTimeField restrict_field(const SpaceTimeField& f, const ModelManifold& m, std::size_t cells);

}  // namespace stochlab
