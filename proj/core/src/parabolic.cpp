#include "stochlab/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace stochlab {

std::string to_string(Extrapolation e) {
  switch (e) {
    case Extrapolation::Last: return "last";
    case Extrapolation::Richardson: return "richardson";
    case Extrapolation::Direct: return "direct";
  }
  return "direct";
}

std::string to_string(ExhaustionStatus s) {
  switch (s) {
    case ExhaustionStatus::Converged: return "converged";
    case ExhaustionStatus::Decaying: return "decaying";
    case ExhaustionStatus::Undetermined: return "undetermined";
  }
  return "undetermined";
}

void SolverConfig::validate() const {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string("solver config: ") + name + " must be > 0");
  };
  positive(dt_initial, "dt_initial");
  positive(dt_max, "dt_max");
  positive(dt_min, "dt_min");
  positive(newton_tol, "newton_tol");
  positive(spacing, "spacing");
  positive(cauchy_tol, "cauchy_tol");
  positive(horizon_cap, "horizon_cap");
  if (!(dt_growth >= 1.0)) throw std::invalid_argument("solver config: dt_growth must be >= 1");
  if (newton_max_iter < 1) throw std::invalid_argument("solver config: newton_max_iter must be >= 1");
  for (std::size_t j = 0; j < lifting.size(); ++j) {
    positive(lifting[j], "lifting");
    if (j > 0 && !(lifting[j] < lifting[j - 1])) {
      throw std::invalid_argument("solver config: lifting ladder must be strictly decreasing");
    }
  }
  if (exhaustion_radii.empty()) throw std::invalid_argument("solver config: exhaustion_radii is empty");
  for (std::size_t j = 0; j < exhaustion_radii.size(); ++j) {
    positive(exhaustion_radii[j], "exhaustion_radii");
    if (j > 0 && !(exhaustion_radii[j] > exhaustion_radii[j - 1])) {
      throw std::invalid_argument("solver config: exhaustion_radii must be strictly increasing");
    }
  }
  for (double p : probe_radii) {
    if (!(p >= 0.0)) throw std::invalid_argument("solver config: probe radii must be >= 0");
  }
  if (restart_at && !(*restart_at > 0.0)) throw std::invalid_argument("solver config: restart_at must be > 0");
}

SolverConfig SolverConfig::with_lifting(std::vector<double> eps, Extrapolation e) {
  SolverConfig c;
  c.lifting = std::move(eps);
  c.extrapolation = e;
  return c;
}

std::vector<double> SolverConfig::default_ladder(int levels) {
  std::vector<double> out;
  for (int j = 0; j < levels; ++j) out.push_back(0.1 * std::ldexp(1.0, -j));
  return out;
}

std::size_t SpaceTimeField::time_index(double t) const {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end()) return times.size() - 1;
  const auto k = static_cast<std::size_t>(it - times.begin());
  if (k > 0 && t - times[k - 1] < times[k] - t) return k - 1;
  return k;
}

double SpaceTimeField::sup(std::size_t k) const {
  return values[k].empty() ? 0.0 : *std::max_element(values[k].begin(), values[k].end());
}

double SpaceTimeField::sup() const {
  double s = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) s = std::max(s, sup(k));
  return s;
}

double SpaceTimeField::at(double t, double r) const {
  if (t <= times.front()) return grid.interpolate(values.front(), r);
  if (t >= times.back()) return grid.interpolate(values.back(), r);
  const auto hi = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  const std::size_t lo = hi - 1;
  const double s = (t - times[lo]) / (times[hi] - times[lo]);
  return (1.0 - s) * grid.interpolate(values[lo], r) + s * grid.interpolate(values[hi], r);
}

namespace {

// ψ continued to all of ℝ: by its tangent at 0 below 0 and by its tangent at
// `cap` above it (finite a only). Both continuations keep ψ convex and C¹.
struct ExtendedPsi {
  const Nonlinearity& n;
  double slope0;
  double cap;
  double psi_cap;
  double slope_cap;

  ExtendedPsi(const Nonlinearity& nl, double level) : n(nl) {
    slope0 = n.psi_prime(0.0);
    const double a = n.sup_range();
    if (std::isinf(a)) {
      cap = kInf;
      psi_cap = slope_cap = 0.0;
    } else {
      cap = std::max(level, 0.0) + 0.5 * (a - std::max(level, 0.0));
      psi_cap = n.psi(cap);
      slope_cap = n.psi_prime(cap);
    }
  }
  double value(double v) const {
    if (v <= 0.0) return slope0 * v;
    if (v > cap) return psi_cap + slope_cap * (v - cap);
    return n.psi(v);
  }
  double slope(double v) const {
    if (v <= 0.0) return slope0;
    if (v > cap) return slope_cap;
    return n.psi_prime(v);
  }
};

struct StepFailure {
  int iterations;
  std::size_t cell;
};

// One backward-Euler step: ψ(v) − u_old = dt·L v, v_M = vb. Newton from v
// (in/out). Convexity of ψ makes the iterates after the first a decreasing
// sequence of supersolutions, so no damping is needed.
std::optional<StepFailure> newton_step(const RadialGrid& grid, const Nonlinearity& n, std::span<const double> u_old,
                                       double vb, double dt, std::vector<long double>& v, const SolverConfig& cfg,
                                       int& iterations) {
  const std::size_t M = grid.cells();
  const auto in = grid.inner_coupling();
  const auto out = grid.outer_coupling();
  double level = vb;
  for (long double x : v) level = std::max(level, static_cast<double>(x));
  for (double x : u_old) level = std::max(level, std::isinf(n.sup_range()) ? 0.0 : n.phi(x));
  const ExtendedPsi psi(n, level);

  std::vector<double> lo(M), di(M), up(M), rhs(M);
  // After the step test passes, one more iteration brings the cell residuals
  // (stiff near the boundary on steep warps) down to roundoff.
  bool polish = false;
  for (int it = 1; it <= cfg.newton_max_iter + 1; ++it) {
    for (std::size_t i = 0; i < M; ++i) {
      const long double west = i > 0 ? v[i - 1] : v[i];
      const long double east = i + 1 < M ? v[i + 1] : static_cast<long double>(vb);
      const long double flux = in[i] * (west - v[i]) + out[i] * (east - v[i]);
      const double vi = static_cast<double>(v[i]);
      rhs[i] = static_cast<double>(-(psi.value(vi) - u_old[i] - dt * flux));
      di[i] = psi.slope(vi) + dt * (in[i] + out[i]);
      lo[i] = i > 0 ? -dt * in[i] : 0.0;
      up[i] = i + 1 < M ? -dt * out[i] : 0.0;
    }
    solve_tridiagonal(lo, di, up, rhs);
    bool done = true;
    std::size_t worst = 0;
    double worst_step = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      v[i] += rhs[i];
      if (!std::isfinite(v[i])) return StepFailure{it, i};
      const double rel = std::abs(rhs[i]) / (1.0 + std::abs(static_cast<double>(v[i])));
      if (rel > cfg.newton_tol) done = false;
      if (rel > worst_step) {
        worst_step = rel;
        worst = i;
      }
    }
    iterations = it;
    if (polish) {
      for (long double& x : v) x = std::max(x, 0.0L);
      return std::nullopt;
    }
    polish = done;
    if (!polish && it >= cfg.newton_max_iter) return StepFailure{it, worst};
  }
  return StepFailure{cfg.newton_max_iter, 0};
}

std::vector<double> planned_times(double horizon, const SolverConfig& cfg) {
  std::vector<double> t{0.0};
  double dt = cfg.dt_initial;
  while (t.back() < horizon) {
    double step = std::min(dt, horizon - t.back());
    if (horizon - t.back() - step < 1e-9 * dt) step = horizon - t.back();
    const double next = t.back() + step;
    t.push_back(next >= horizon * (1.0 - 1e-15) ? horizon : next);
    dt = std::min(dt * cfg.dt_growth, cfg.dt_max);
  }
  return t;
}

}  // namespace

SpaceTimeField solve_lifted(const ModelManifold& m, const Nonlinearity& n, const RadialGrid& grid,
                            const RadialFunction& u0, const TimeFunction& g, double horizon, double epsilon,
                            const SolverConfig& cfg) {
  (void)m;
  cfg.validate();
  if (!(horizon > 0.0)) throw std::invalid_argument("solve_dirichlet requires a horizon T > 0");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("lifting epsilon must be >= 0");

  SolveDiagnostics diag;
  if (std::isinf(horizon)) {
    horizon = cfg.horizon_cap;
    diag.horizon_truncated = true;
  }
  const std::size_t M = grid.cells();
  const auto centers = grid.centers();
  const double log_scale = grid.log_total_volume();
  const double boundary_weight = std::exp(grid.log_transmissibility()[M - 1] - log_scale);

  auto boundary = [&](double t) {
    const double gv = g(t);
    if (!(gv >= 0.0) || !std::isfinite(gv)) {
      throw std::invalid_argument("boundary data must be finite and >= 0 (t = " + std::to_string(t) + ")");
    }
    return gv + epsilon;
  };

  std::vector<double> datum(M);
  for (std::size_t i = 0; i < M; ++i) {
    const double x = u0(centers[i]);
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument("initial datum must be finite and >= 0 (r = " + std::to_string(centers[i]) + ")");
    }
    datum[i] = x + epsilon;
  }

  const auto times = planned_times(horizon, cfg);
  SpaceTimeField field{grid, times, {}, {}, datum, epsilon, {}, diag};
  field.values.reserve(times.size());
  field.values.push_back(datum);
  field.boundary_trace.push_back(boundary(0.0));
  field.inflow.push_back(0.0);

  std::vector<double> u = datum;
  // Extended precision for v: near the boundary of a steep warp dt·T/vol is
  // huge, and the boundary flux is that times vb − v_M.
  std::vector<long double> v(M);
  for (std::size_t i = 0; i < M; ++i) v[i] = n.phi(u[i]);

  // Advance over [ta, tb]; on Newton failure split the interval in two.
  std::function<void(double, double, int)> advance = [&](double ta, double tb, int depth) {
    const double dt = tb - ta;
    if (dt < cfg.dt_min) {
      throw NumericalError("time step underflow at t = " + std::to_string(ta));
    }
    const double gb = boundary(tb);
    const double vb = n.phi(gb);
    std::vector<long double> trial = v;
    int iters = 0;
    const auto failure = newton_step(grid, n, u, vb, dt, trial, cfg, iters);
    if (failure) {
      if (depth >= 40) {
        std::ostringstream os;
        os << "Newton failed at t = " << tb << ", cell " << failure->cell << " (r = " << centers[failure->cell]
           << ") after " << failure->iterations << " iterations";
        throw NumericalError(os.str());
      }
      ++field.diagnostics.dt_retries;
      const double mid = 0.5 * (ta + tb);
      advance(ta, mid, depth + 1);
      advance(mid, tb, depth + 1);
      return;
    }
    field.diagnostics.max_newton_iterations = std::max(field.diagnostics.max_newton_iterations, iters);
    field.inflow.back() += static_cast<double>(dt * boundary_weight * (vb - trial[M - 1]));
    v = std::move(trial);
    for (std::size_t i = 0; i < M; ++i) {
      u[i] = std::max(0.0, n.psi(std::min(static_cast<double>(v[i]), std::nextafter(n.sup_range(), 0.0))));
    }
  };

  for (std::size_t k = 1; k < times.size(); ++k) {
    field.inflow.push_back(0.0);
    advance(times[k - 1], times[k], 0);
    field.values.push_back(u);
    field.boundary_trace.push_back(boundary(times[k]));
    ++field.diagnostics.steps;
  }
  return field;
}

SpaceTimeField solve_dirichlet(const ModelManifold& m, const Nonlinearity& n, const RadialGrid& grid,
                               const RadialFunction& u0, const TimeFunction& g, double horizon,
                               const SolverConfig& cfg) {
  cfg.validate();
  if (cfg.lifting.empty()) return solve_lifted(m, n, grid, u0, g, horizon, 0.0, cfg);

  std::vector<SpaceTimeField> ladder;
  for (double eps : cfg.lifting) ladder.push_back(solve_lifted(m, n, grid, u0, g, horizon, eps, cfg));

  // Lifted solves must be nonincreasing as ε decreases.
  bool monotone = true;
  double worst = 0.0;
  auto check_order = [&](const SpaceTimeField& upper, const SpaceTimeField& lower) {
    if (upper.values.size() != lower.values.size()) return;
    const double tol = 1e3 * cfg.newton_tol * (1.0 + upper.sup());
    for (std::size_t k = 0; k < upper.values.size(); ++k) {
      for (std::size_t i = 0; i < upper.values[k].size(); ++i) {
        const double viol = lower.values[k][i] - upper.values[k][i];
        worst = std::max(worst, viol);
        if (viol > tol) monotone = false;
      }
    }
  };
  for (std::size_t j = 1; j < ladder.size(); ++j) check_order(ladder[j - 1], ladder[j]);

  SpaceTimeField result = [&]() {
    switch (cfg.extrapolation) {
      case Extrapolation::Last: return ladder.back();
      case Extrapolation::Richardson: {
        if (ladder.size() < 2) return ladder.back();
        const auto& a = ladder[ladder.size() - 2];
        const auto& b = ladder.back();
        if (a.values.size() != b.values.size()) return b;
        const double ea = a.lifting;
        const double eb = b.lifting;
        // linear in ε through the two smallest levels, evaluated at ε = 0
        auto extra = [&](double xa, double xb) { return std::max(0.0, xb - eb * (xa - xb) / (ea - eb)); };
        SpaceTimeField r = b;
        for (std::size_t k = 0; k < r.values.size(); ++k) {
          for (std::size_t i = 0; i < r.values[k].size(); ++i) r.values[k][i] = extra(a.values[k][i], b.values[k][i]);
          r.boundary_trace[k] = extra(a.boundary_trace[k], b.boundary_trace[k]);
        }
        for (std::size_t i = 0; i < r.datum.size(); ++i) r.datum[i] = extra(a.datum[i], b.datum[i]);
        r.inflow.clear();
        r.lifting = 0.0;
        return r;
      }
      case Extrapolation::Direct: {
        SpaceTimeField d = solve_lifted(m, n, grid, u0, g, horizon, 0.0, cfg);
        check_order(ladder.back(), d);
        return d;
      }
    }
    return ladder.back();
  }();
  result.diagnostics.ladder_monotone = monotone;
  result.diagnostics.ladder_worst_violation = worst;
  return result;
}

SpaceTimeField restrict_field(const SpaceTimeField& f, const ModelManifold& m, std::size_t cells) {
  if (cells == 0 || cells > f.grid.cells()) throw std::out_of_range("restrict_field: bad cell count");
  const auto nodes = f.grid.nodes();
  RadialGrid grid(m, std::vector<double>(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(cells) + 1));
  SpaceTimeField r{grid, f.times, {}, {}, {}, f.lifting, {}, f.diagnostics};
  for (const auto& row : f.values) r.values.emplace_back(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(cells));
  r.datum.assign(f.datum.begin(), f.datum.begin() + static_cast<std::ptrdiff_t>(cells));
  // trace at the new outer face: value of the first dropped cell (or the old boundary)
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    r.boundary_trace.push_back(cells < f.grid.cells() ? f.values[k][cells] : f.boundary_trace[k]);
  }
  return r;
}

ExhaustionResult exhaust(const ModelManifold& m, const Nonlinearity& n, const RadialFunction& u0,
                         const TimeFunction& g, double horizon, const SolverConfig& cfg, int direction) {
  cfg.validate();
  ExhaustionResult res;
  res.radii = cfg.exhaustion_radii;
  res.probe_radii = cfg.probe_radii;

  auto solve_level = [&](double R) {
    const RadialGrid grid = make_grid_with_spacing(m, R, cfg.spacing);
    return solve_dirichlet(m, n, grid, u0, g, horizon, cfg);
  };
  if (cfg.parallel && res.radii.size() > 1) {
    std::vector<std::future<SpaceTimeField>> jobs;
    for (double R : res.radii) jobs.push_back(std::async(std::launch::async, solve_level, R));
    for (auto& j : jobs) res.levels.push_back(j.get());
  } else {
    for (double R : res.radii) res.levels.push_back(solve_level(R));
  }

  for (const auto& lv : res.levels) {
    std::vector<double> p;
    for (double r : res.probe_radii) p.push_back(lv.grid.interpolate(lv.values.back(), r));
    res.probe_values.push_back(std::move(p));
  }

  // Comparison ordering on common cells: increasing in R for the minimal
  // construction, decreasing for the witness.
  for (std::size_t j = 1; j < res.levels.size(); ++j) {
    const auto& a = res.levels[j - 1];
    const auto& b = res.levels[j];
    const double tol = 1e3 * cfg.newton_tol * (1.0 + std::max(a.sup(), b.sup()));
    const bool same_times = a.times == b.times;
    const std::size_t common = std::min(a.grid.cells(), b.grid.cells());
    for (std::size_t k = same_times ? 0 : a.values.size() - 1; k < a.values.size(); ++k) {
      const auto& rb = same_times ? b.values[k] : b.values.back();
      for (std::size_t i = 0; i < common; ++i) {
        if (std::abs(a.grid.centers()[i] - b.grid.centers()[i]) > 1e-12 * (1.0 + a.grid.centers()[i])) break;
        const double viol = direction * (a.values[k][i] - rb[i]);
        res.worst_order_violation = std::max(res.worst_order_violation, viol);
        if (viol > tol) res.monotone_in_radius = false;
      }
    }
  }

  constexpr double floor = 1e-300;
  for (std::size_t j = 1; j < res.probe_values.size(); ++j) {
    double change = 0.0;
    double ratio = kInf;
    for (std::size_t p = 0; p < res.probe_radii.size(); ++p) {
      const double x0 = res.probe_values[j - 1][p];
      const double x1 = res.probe_values[j][p];
      const double diff = std::abs(x1 - x0);
      change = std::max(change, diff == 0.0 ? 0.0 : diff / std::max(std::abs(x1), floor));
      ratio = std::min(ratio, x1 > 0.0 ? x0 / x1 : (x0 > 0.0 ? kInf : 1.0));
    }
    res.relative_changes.push_back(change);
    res.decay_ratios.push_back(ratio);
  }

  if (res.relative_changes.empty()) {
    res.status = ExhaustionStatus::Undetermined;
  } else if (res.relative_changes.back() <= cfg.cauchy_tol) {
    res.status = ExhaustionStatus::Converged;
  } else {
    const std::size_t K = res.decay_ratios.size();
    const std::size_t from = K >= 2 ? K - 2 : 0;
    bool decaying = direction < 0;
    for (std::size_t j = from; j < K; ++j) decaying = decaying && res.decay_ratios[j] >= 2.0;
    res.status = decaying ? ExhaustionStatus::Decaying : ExhaustionStatus::Undetermined;
  }

  // Limit candidate on the inner half of the smallest ball.
  const auto& first = res.levels.front();
  std::size_t inner = 0;
  while (inner < first.grid.cells() && first.grid.nodes()[inner + 1] <= 0.5 * res.radii.front() + 1e-12) ++inner;
  inner = std::max<std::size_t>(inner, 1);
  std::vector<SpaceTimeField> cut;
  for (const auto& lv : res.levels) cut.push_back(restrict_field(lv, m, inner));
  SpaceTimeField lim = cut.back();
  bool aligned = true;
  for (const auto& c : cut) aligned = aligned && c.times == lim.times;
  if (res.status == ExhaustionStatus::Decaying && cut.size() >= 3 && aligned) {
    const auto& a = cut[cut.size() - 3];
    const auto& b = cut[cut.size() - 2];
    auto aitken = [&](double x0, double x1, double x2) {
      const double d1 = x1 - x0;
      const double d2 = x2 - x1;
      if (d1 == 0.0 || d2 == 0.0) return x2;
      const double q = d2 / d1;
      if (!(q > 0.0 && q < 1.0)) return x2;
      const double est = x2 + d2 * q / (1.0 - q);
      return direction < 0 ? std::clamp(est, 0.0, x2) : std::max(est, x2);
    };
    for (std::size_t k = 0; k < lim.values.size(); ++k) {
      for (std::size_t i = 0; i < lim.values[k].size(); ++i) {
        lim.values[k][i] = aitken(a.values[k][i], b.values[k][i], cut.back().values[k][i]);
      }
      lim.boundary_trace[k] = aitken(a.boundary_trace[k], b.boundary_trace[k], cut.back().boundary_trace[k]);
    }
  }
  res.limit = std::move(lim);
  return res;
}

ExhaustionResult minimal_solution(const ModelManifold& m, const Nonlinearity& n, const RadialFunction& u0,
                                  double horizon, const SolverConfig& cfg) {
  return exhaust(m, n, u0, [](double) { return 0.0; }, horizon, cfg, +1);
}

ExhaustionResult witness_solution(const ModelManifold& m, const Nonlinearity& n, const RadialFunction& u0,
                                  double horizon, const ClockSpec& clock, const SolverConfig& cfg) {
  clock.validate();
  // ‖u0‖∞ sampled on the finest cell centres used by the schedule
  const double R = cfg.exhaustion_radii.back();
  const int samples = std::max(8, static_cast<int>(std::lround(R / cfg.spacing)));
  double u0_sup = 0.0;
  for (int i = 0; i < samples; ++i) u0_sup = std::max(u0_sup, u0((i + 0.5) * R / samples));
  const auto restart = cfg.restart_at;
  auto g = [clock, u0_sup, restart](double t) {
    if (restart && t > *restart) return 0.0;
    return witness_boundary(clock, u0_sup, t);
  };
  return exhaust(m, n, u0, g, horizon, cfg, -1);
}

GapReport nonuniqueness_gap(const SpaceTimeField& minimal, const SpaceTimeField& witness, double time,
                            std::span<const double> probe_radii, double tolerance) {
  if (minimal.grid.cells() != witness.grid.cells() ||
      std::abs(minimal.grid.radius() - witness.grid.radius()) > 1e-12 * minimal.grid.radius()) {
    throw std::invalid_argument("nonuniqueness_gap: fields live on incompatible grids");
  }
  if (time > minimal.horizon() * (1 + 1e-12) || time > witness.horizon() * (1 + 1e-12) || time < 0.0) {
    throw std::out_of_range("nonuniqueness_gap: time outside the field horizons");
  }
  GapReport g;
  g.time = time;
  g.tolerance = tolerance;
  for (double x : witness.datum) g.datum_sup = std::max(g.datum_sup, x);
  for (double r : probe_radii) {
    const double w = witness.at(time, r);
    const double u = minimal.at(time, r);
    g.witness_sup = std::max(g.witness_sup, w);
    g.difference = std::max(g.difference, std::abs(w - u));
  }
  g.excess = g.witness_sup - g.datum_sup;
  g.witnessed = g.excess > tolerance && g.difference > tolerance;
  return g;
}

std::vector<double> separable_solution(const Nonlinearity& n, std::span<const double> W, double t) {
  if (n.kind() != NonlinearityKind::Power || !(n.exponent() < 1.0)) {
    throw std::invalid_argument("separable_solution needs a power nonlinearity with m < 1");
  }
  if (t < 0.0) throw std::invalid_argument("separable_solution needs t >= 0");
  const double m = n.exponent();
  const double amp = std::pow((1.0 - m) * t, 1.0 / (1.0 - m));
  std::vector<double> u(W.size());
  for (std::size_t i = 0; i < W.size(); ++i) {
    if (W[i] < 0.0) throw std::invalid_argument("separable_solution needs W >= 0");
    u[i] = amp * std::pow(W[i], 1.0 / m);
  }
  return u;
}

std::vector<double> pde_residual(const RadialGrid& grid, const Nonlinearity& n, std::span<const double> u_prev,
                                 std::span<const double> u_next, double dt, double boundary_value) {
  const std::size_t M = grid.cells();
  if (u_prev.size() != M || u_next.size() != M) throw std::invalid_argument("pde_residual: size mismatch");
  const auto in = grid.inner_coupling();
  const auto out = grid.outer_coupling();
  std::vector<double> v(M);
  for (std::size_t i = 0; i < M; ++i) v[i] = n.phi(u_next[i]);
  const double vb = n.phi(boundary_value);
  std::vector<double> r(M);
  for (std::size_t i = 0; i < M; ++i) {
    const double west = i > 0 ? v[i - 1] : v[i];
    const double east = i + 1 < M ? v[i + 1] : vb;
    r[i] = (u_next[i] - u_prev[i]) / dt - (in[i] * (west - v[i]) + out[i] * (east - v[i]));
  }
  return r;
}

double MassSeries::max_balance_residual() const {
  double w = 0.0;
  for (double x : balance_residual) w = std::max(w, x);
  return w;
}

MassSeries mass_series(const SpaceTimeField& field) {
  MassSeries s;
  s.times = field.times;
  s.log_scale = field.grid.log_total_volume();
  const auto lv = field.grid.log_cell_volumes();
  std::vector<double> w(lv.size());
  for (std::size_t i = 0; i < lv.size(); ++i) w[i] = std::exp(lv[i] - s.log_scale);
  double flux = 0.0;
  for (std::size_t k = 0; k < field.values.size(); ++k) {
    double mass = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) mass += w[i] * field.values[k][i];
    if (!field.inflow.empty()) flux += field.inflow[k];
    s.mass.push_back(mass);
    s.boundary_flux_integral.push_back(flux);
    if (field.inflow.empty()) {
      s.balance_residual.push_back(0.0);
    } else {
      const double scale = std::max({s.mass.front(), mass, std::abs(flux), 1e-300});
      s.balance_residual.push_back(std::abs(mass - s.mass.front() - flux) / scale);
    }
  }
  return s;
}

double WeakFormReport::max_normalized() const {
  double w = 0.0;
  for (std::size_t j = 0; j < residuals.size(); ++j) {
    const double denom = u_sup * c2_norms[j];
    if (denom > 0.0) w = std::max(w, std::abs(residuals[j]) / denom);
  }
  return w;
}

std::vector<WeakTestFunction> standard_test_family(double radius) {
  std::vector<WeakTestFunction> out;
  std::vector<double> rhos;
  for (double f : {0.125, 0.25, 0.5}) {
    const double rho = std::min(4.0, f * radius);
    if (rhos.empty() || rho > rhos.back() * (1 + 1e-12)) rhos.push_back(rho);
  }
  for (double rho : rhos) {
    for (int p : {3, 4}) out.push_back({rho, p});
  }
  return out;
}

namespace {

struct Bump {
  double rho;
  int N;
  const ModelManifold& m;

  double eta(double r) const {
    if (r >= rho) return 0.0;
    return std::pow(1.0 - r * r / (rho * rho), 4);
  }
  double d_eta(double r) const {
    if (r >= rho) return 0.0;
    const double s = 1.0 - r * r / (rho * rho);
    return -8.0 * r / (rho * rho) * s * s * s;
  }
  double dd_eta(double r) const {
    if (r >= rho) return 0.0;
    const double s = 1.0 - r * r / (rho * rho);
    return -8.0 / (rho * rho) * s * s * s + 48.0 * r * r / (rho * rho * rho * rho) * s * s;
  }
  // η'' + (N−1)(w'/w)η', with r·w'/w → 1 at the pole
  double lap_eta(double r) const {
    if (r >= rho) return 0.0;
    const double s = 1.0 - r * r / (rho * rho);
    const double rw = r > 0.0 ? r * m.log_derivative(r) : 1.0;
    return dd_eta(r) - 8.0 / (rho * rho) * s * s * s * (N - 1) * rw;
  }
};

}  // namespace

WeakFormReport weak_residual(const SpaceTimeField& field, const ModelManifold& m, const Nonlinearity& n,
                             const std::vector<WeakTestFunction>& tests) {
  WeakFormReport rep;
  rep.tests = tests;
  rep.u_sup = std::max(field.sup(), *std::max_element(field.datum.begin(), field.datum.end()));
  const auto nodes = field.grid.nodes();
  for (std::size_t i = 1; i < nodes.size(); ++i) rep.h = std::max(rep.h, nodes[i] - nodes[i - 1]);
  for (std::size_t k = 1; k < field.times.size(); ++k) rep.dt = std::max(rep.dt, field.times[k] - field.times[k - 1]);

  const double T = field.horizon();
  const auto centers = field.grid.centers();
  const auto lv = field.grid.log_cell_volumes();
  const std::size_t M = field.grid.cells();

  for (const auto& test : tests) {
    if (!(test.radius > 0.0) || test.radius > field.grid.radius()) {
      throw std::invalid_argument("weak_residual: test support must lie inside the ball");
    }
    const Bump b{test.radius, m.dimension(), m};
    auto theta = [&](double t) { return std::pow(1.0 - t / T, test.time_power); };
    // Volumes relative to the test support keep every sum O(1).
    const double log_ref = m.log_volume(test.radius);
    // weta: η at the cell point times |K_i|; wlap: ∫_{K_i} Δη dμ taken exactly as
    // the face-flux difference of A(r)η'(r), so constants cancel to roundoff.
    const auto la = field.grid.log_face_areas();
    std::vector<double> flux(M + 1, 0.0);
    for (std::size_t i = 0; i <= M; ++i) {
      const double d = b.d_eta(nodes[i]);
      flux[i] = d == 0.0 ? 0.0 : d * std::exp(la[i] - log_ref);
    }
    std::vector<double> weta(M), wlap(M);
    for (std::size_t i = 0; i < M; ++i) {
      const double e = b.eta(centers[i]);
      // outside the support the volume ratio can overflow; 0 · inf is not 0
      weta[i] = e == 0.0 ? 0.0 : e * std::exp(lv[i] - log_ref);
      wlap[i] = flux[i + 1] - flux[i];
    }
    double res = 0.0;
    for (std::size_t i = 0; i < M; ++i) res += field.datum[i] * weta[i] * theta(0.0);
    for (std::size_t k = 1; k < field.times.size(); ++k) {
      const double dth = theta(field.times[k]) - theta(field.times[k - 1]);
      const double dt = field.times[k] - field.times[k - 1];
      const double th = theta(field.times[k]);
      double acc = 0.0;
      for (std::size_t i = 0; i < M; ++i) {
        if (weta[i] == 0.0 && wlap[i] == 0.0) continue;
        const double u = field.values[k][i];
        acc += u * weta[i] * dth + dt * n.phi(u) * wlap[i] * th;
      }
      res += acc;
    }
    // ‖ξ‖C²: largest derivative of order <= 2 times the support measure
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, sl = 0.0;
    for (int j = 0; j <= 2000; ++j) {
      const double r = test.radius * j / 2000.0;
      s0 = std::max(s0, std::abs(b.eta(r)));
      s1 = std::max(s1, std::abs(b.d_eta(r)));
      s2 = std::max(s2, std::abs(b.dd_eta(r)));
      sl = std::max(sl, std::abs(b.lap_eta(r)));
    }
    const double p = test.time_power;
    const double dtheta = p / T;
    const double ddtheta = p * (p - 1.0) / (T * T);
    const double c2 = std::max({s0, s1, s2, sl, s0 * dtheta, s0 * ddtheta, s1 * dtheta}) * T;
    rep.residuals.push_back(res);
    rep.c2_norms.push_back(c2);
    rep.max_residual = std::max(rep.max_residual, std::abs(res));
  }
  return rep;
}

}  // namespace stochlab
