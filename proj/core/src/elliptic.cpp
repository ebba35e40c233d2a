#include "stochlab/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_odeiv2.h>

namespace stochlab {

double EllipticProfile::sup() const {
  double s = boundary;
  for (double x : values) s = std::max(s, x);
  return s;
}

std::vector<double> apply_laplacian(const RadialGrid& grid, const std::vector<double>& w, double boundary) {
  const std::size_t M = grid.cells();
  if (w.size() != M) throw std::invalid_argument("apply_laplacian: field size does not match the grid");
  const auto in = grid.inner_coupling();
  const auto out = grid.outer_coupling();
  std::vector<double> lw(M);
  for (std::size_t i = 0; i < M; ++i) {
    const double west = i > 0 ? w[i - 1] : w[i];
    const double east = i + 1 < M ? w[i + 1] : boundary;
    lw[i] = in[i] * (west - w[i]) + out[i] * (east - w[i]);
  }
  return lw;
}

double scaled_residual(const RadialGrid& grid, const std::vector<double>& w, double boundary,
                       const std::function<double(double)>& rhs) {
  const auto lw = apply_laplacian(grid, w, boundary);
  const auto in = grid.inner_coupling();
  const auto out = grid.outer_coupling();
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    worst = std::max(worst, std::abs(lw[i] - rhs(w[i])) / (1.0 + in[i] + out[i]));
  }
  return worst;
}

EllipticProfile constant_profile(const RadialGrid& grid, double value) {
  EllipticProfile p{grid, std::vector<double>(grid.cells(), value), value, 0.0, 0, {}};
  return p;
}

namespace {

// Interior sign check of L_h W − F(W) >= −tol_i.
SignCheck sign_check(const RadialGrid& grid, const std::vector<double>& w, double boundary,
                     const std::function<double(double)>& rhs, const std::function<double(std::size_t)>& tol) {
  SignCheck c;
  const auto lw = apply_laplacian(grid, w, boundary);
  const auto centers = grid.centers();
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const double t = tol(i);
    c.tolerance = std::max(c.tolerance, t);
    const double defect = lw[i] - rhs(w[i]) + t;
    if (defect < c.worst_defect) {
      c.worst_defect = defect;
      c.worst_cell = i;
      c.worst_radius = centers[i];
      c.passed = false;
    }
  }
  if (!c.passed) {
    std::ostringstream os;
    os << "sign check fails at cell " << c.worst_cell << " (r = " << c.worst_radius << "), defect "
       << c.worst_defect;
    c.note = os.str();
  }
  return c;
}

// Roundoff allowance for L_h applied to a field of size `scale`.
std::function<double(std::size_t)> roundoff(const RadialGrid& grid, double scale) {
  const auto in = grid.inner_coupling();
  const auto out = grid.outer_coupling();
  return [in, out, scale](std::size_t i) { return 1e-11 * (1.0 + in[i] + out[i]) * std::max(scale, 1e-300); };
}

EllipticProfile sweep(const RadialGrid& grid, const std::function<double(double)>& rhs, double K,
                      const EllipticProfile& lower, const EllipticProfile& upper, double tol, int max_iter) {
  const std::size_t M = grid.cells();
  if (lower.values.size() != M || upper.values.size() != M) {
    throw std::invalid_argument("monotone_iteration: bracket sizes do not match the grid");
  }
  const auto in = grid.inner_coupling();
  const auto out = grid.outer_coupling();
  const auto centers = grid.centers();
  const double scale = std::max(1.0, upper.sup());
  const double order_tol = 1e-10 * scale;

  auto fail = [&](const std::string& what, std::size_t i) {
    std::ostringstream os;
    os << "monotone_iteration: " << what << " at cell " << i << " (r = " << centers[i] << ")";
    return os.str();
  };

  if (lower.boundary > upper.boundary + order_tol) {
    throw std::invalid_argument("monotone_iteration: lower boundary value exceeds the upper one");
  }
  for (std::size_t i = 0; i < M; ++i) {
    if (lower.values[i] > upper.values[i] + order_tol) throw std::invalid_argument(fail("lower > upper", i));
  }
  {
    const auto base = roundoff(grid, scale);
    const auto sub = sign_check(grid, lower.values, lower.boundary, rhs,
                                [&](std::size_t i) { return base(i) + lower.check.tolerance; });
    if (!sub.passed) throw std::invalid_argument(fail("lower is not a subsolution", sub.worst_cell));
    // supersolution: L_h W − F(W) <= tol, i.e. the sign check on −(·)
    const auto lw = apply_laplacian(grid, upper.values, upper.boundary);
    for (std::size_t i = 0; i + 1 < M; ++i) {
      if (lw[i] - rhs(upper.values[i]) > base(i) + upper.check.tolerance) {
        throw std::invalid_argument(fail("upper is not a supersolution", i));
      }
    }
  }

  std::vector<double> w = upper.values;
  const double hb = upper.boundary;
  std::vector<double> lo(M), di(M), up(M), b(M);
  int it = 0;
  double res = scaled_residual(grid, w, hb, rhs);
  while (it < max_iter) {
    ++it;
    for (std::size_t i = 0; i < M; ++i) {
      di[i] = K + in[i] + out[i];
      lo[i] = i > 0 ? -in[i] : 0.0;
      up[i] = i + 1 < M ? -out[i] : 0.0;
      b[i] = K * w[i] - rhs(w[i]) + (i + 1 == M ? out[i] * hb : 0.0);
    }
    solve_tridiagonal(lo, di, up, b);
    for (std::size_t i = 0; i < M; ++i) {
      const double slack = order_tol * (1.0 + std::abs(w[i]));
      if (b[i] > w[i] + slack) throw NumericalError(fail("iterate increased", i));
      if (b[i] < lower.values[i] - slack) throw NumericalError(fail("iterate dropped below the subsolution", i));
    }
    w.swap(b);
    res = scaled_residual(grid, w, hb, rhs);
    if (res <= tol * scale) break;
  }
  if (res > tol * scale) {
    throw NumericalError("monotone_iteration: no convergence after " + std::to_string(it) + " sweeps, residual " +
                         std::to_string(res));
  }
  EllipticProfile p{grid, std::move(w), hb, res, it, {}};
  return p;
}

}  // namespace

EllipticProfile solve_semilinear(const ModelManifold& m, const Nonlinearity& n, const RadialGrid& grid, double h) {
  (void)m;
  if (!(h >= 0.0) || !std::isfinite(h) || h >= n.sup_range()) {
    throw std::invalid_argument("solve_semilinear: boundary value must lie in [0, a), got " + std::to_string(h));
  }
  const std::size_t M = grid.cells();
  auto rhs = [&](double x) { return n.psi(x); };
  EllipticProfile p{grid, std::vector<double>(M, h), h, 0.0, 0, {}};
  if (h == 0.0) return p;

  const auto in = grid.inner_coupling();
  const auto out = grid.outer_coupling();
  auto& w = p.values;
  std::vector<double> lo(M), di(M), up(M), f(M);
  bool polish = false;
  constexpr int kMaxIter = 100;
  for (int it = 1; it <= kMaxIter + 1; ++it) {
    const auto lw = apply_laplacian(grid, w, h);
    for (std::size_t i = 0; i < M; ++i) {
      f[i] = -(n.psi(w[i]) - lw[i]);
      di[i] = n.psi_prime(w[i]) + in[i] + out[i];
      lo[i] = i > 0 ? -in[i] : 0.0;
      up[i] = i + 1 < M ? -out[i] : 0.0;
    }
    solve_tridiagonal(lo, di, up, f);
    double step = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      // convexity keeps the iterates above the solution; the clamp only
      // guards against roundoff
      w[i] = std::clamp(w[i] + f[i], 0.0, h);
      step = std::max(step, std::abs(f[i]));
    }
    p.iterations = it;
    if (polish) break;
    polish = step <= 1e-14 * (1.0 + h);
    if (!polish && it >= kMaxIter) {
      throw NumericalError("solve_semilinear: Newton did not converge, last step " + std::to_string(step));
    }
  }
  p.residual = scaled_residual(grid, w, h, rhs);
  return p;
}

EllipticProfile monotone_iteration(const ModelManifold& m, const Nonlinearity& n, const RadialGrid& grid,
                                   const EllipticProfile& lower, const EllipticProfile& upper, double tol,
                                   int max_iter) {
  (void)m;
  const double top = upper.sup();
  if (top >= n.sup_range()) throw std::invalid_argument("monotone_iteration: upper reaches sup phi");
  const double K = std::max(n.psi_prime(top), 1e-12);
  return sweep(grid, [&](double x) { return n.psi(std::max(x, 0.0)); }, K, lower, upper, tol, max_iter);
}

EllipticProfile linear_monotone_iteration(const RadialGrid& grid, double lambda, const EllipticProfile& lower,
                                          const EllipticProfile& upper, double tol, int max_iter) {
  if (!(lambda > 0.0)) throw std::invalid_argument("linear_monotone_iteration requires lambda > 0");
  return sweep(grid, [lambda](double x) { return lambda * x; }, lambda, lower, upper, tol, max_iter);
}

std::string to_string(ExhaustionVerdict v) {
  switch (v) {
    case ExhaustionVerdict::Nontrivial: return "nontrivial";
    case ExhaustionVerdict::Trivial: return "trivial";
    case ExhaustionVerdict::Undetermined: return "undetermined";
  }
  return "undetermined";
}

EllipticExhaustion exhaustion_limit(const ModelManifold& m, const Nonlinearity& n, double h,
                                    const EllipticSchedule& schedule) {
  if (!(h > 0.0)) throw std::invalid_argument("exhaustion_limit requires h > 0");
  if (schedule.radii.empty()) throw std::invalid_argument("exhaustion_limit: empty schedule");
  EllipticExhaustion res;
  res.radii = schedule.radii;
  res.probe_radii = schedule.probe_radii;

  auto level = [&](double R) { return solve_semilinear(m, n, make_grid_with_spacing(m, R, schedule.spacing), h); };
  if (schedule.parallel && res.radii.size() > 1) {
    std::vector<std::future<EllipticProfile>> jobs;
    for (double R : res.radii) jobs.push_back(std::async(std::launch::async, level, R));
    for (auto& j : jobs) res.profiles.push_back(j.get());
  } else {
    for (double R : res.radii) res.profiles.push_back(level(R));
  }

  for (const auto& p : res.profiles) {
    std::vector<double> v;
    for (double r : res.probe_radii) v.push_back(p.at(r));
    res.probe_values.push_back(std::move(v));
  }

  for (std::size_t j = 1; j < res.profiles.size(); ++j) {
    const auto& a = res.profiles[j - 1];
    const auto& b = res.profiles[j];
    const std::size_t common = std::min(a.grid.cells(), b.grid.cells());
    for (std::size_t i = 0; i < common; ++i) {
      if (std::abs(a.grid.centers()[i] - b.grid.centers()[i]) > 1e-12 * (1.0 + a.grid.centers()[i])) break;
      const double viol = b.values[i] - a.values[i];
      res.worst_order_violation = std::max(res.worst_order_violation, viol);
      if (viol > 1e-10 * h) res.monotone_in_radius = false;
    }
    double change = 0.0;
    double ratio = kInf;
    for (std::size_t p = 0; p < res.probe_radii.size(); ++p) {
      const double x0 = res.probe_values[j - 1][p];
      const double x1 = res.probe_values[j][p];
      const double diff = std::abs(x1 - x0);
      change = std::max(change, diff == 0.0 ? 0.0 : diff / std::max(std::abs(x1), 1e-300));
      ratio = std::min(ratio, x1 > 0.0 ? x0 / x1 : (x0 > 0.0 ? kInf : 1.0));
    }
    res.relative_changes.push_back(change);
    res.decay_ratios.push_back(ratio);
  }

  const std::size_t K = res.relative_changes.size();
  if (K == 0) return res;
  const std::size_t from = K >= 2 ? K - 2 : 0;
  bool stable = true;
  bool decaying = true;
  for (std::size_t j = from; j < K; ++j) {
    stable = stable && res.relative_changes[j] <= schedule.cauchy_tol;
    decaying = decaying && res.decay_ratios[j] >= schedule.decay_factor;
  }
  const auto& last = res.probe_values.back();
  const bool above_floor = *std::min_element(last.begin(), last.end()) > schedule.floor * h;
  if (stable && above_floor) {
    res.verdict = ExhaustionVerdict::Nontrivial;
  } else if (decaying) {
    res.verdict = ExhaustionVerdict::Trivial;
  }
  return res;
}

// --- shooting ----------------------------------------------------------------

std::string to_string(ShootingVerdict v) {
  switch (v) {
    case ShootingVerdict::Bounded: return "bounded";
    case ShootingVerdict::Unbounded: return "unbounded";
    case ShootingVerdict::Undetermined: return "undetermined";
  }
  return "undetermined";
}

double ShootingResult::sup() const {
  if (verdict == ShootingVerdict::Bounded && std::isfinite(estimate.limit)) {
    return std::max(estimate.limit, values.empty() ? 0.0 : values.back());
  }
  return values.empty() ? 0.0 : values.back();
}

namespace {

struct RadialOde {
  const ModelManifold* m;
  double lambda;
  double n1;
  double drift(double r) const { return n1 * m->log_derivative(r); }
};

// GSL calls back through C; exceptions must not cross it.
int ode_rhs(double r, const double x[], double dxdt[], void* params) {
  const auto* ode = static_cast<const RadialOde*>(params);
  try {
    dxdt[0] = x[1];
    dxdt[1] = ode->lambda * x[0] - ode->drift(r) * x[1];
  } catch (...) {
    return GSL_EBADFUNC;
  }
  return GSL_SUCCESS;
}

int ode_jacobian(double r, const double x[], double* dfdy, double dfdt[], void* params) {
  const auto* ode = static_cast<const RadialOde*>(params);
  try {
    const double q = ode->drift(r);
    // (w'/w)' by central difference; only the step control sees it
    const double d = 1e-6 * r;
    const double dq = (ode->drift(r + d) - ode->drift(r - d)) / (2.0 * d);
    dfdy[0] = 0.0;
    dfdy[1] = 1.0;
    dfdy[2] = ode->lambda;
    dfdy[3] = -q;
    dfdt[0] = 0.0;
    dfdt[1] = -dq * x[1];
  } catch (...) {
    return GSL_EBADFUNC;
  }
  return GSL_SUCCESS;
}

struct Trajectory {
  std::vector<double> r, v, dv;
  bool capped = false;
};

// Integrates from the series start to each observation radius in turn (BDF,
// the drift is stiff on fast-growing warps). Stops after the first radius at
// which v exceeds `cap`.
Trajectory integrate_radial(const ModelManifold& m, double lambda, const std::vector<double>& obs, double cap,
                            const ShootingConfig& cfg) {
  if (!(lambda > 0.0)) throw std::invalid_argument("linear_shooting requires lambda > 0");
  static const auto silence = gsl_set_error_handler_off();
  (void)silence;
  RadialOde ode{&m, lambda, static_cast<double>(m.dimension() - 1)};
  gsl_odeiv2_system sys{ode_rhs, ode_jacobian, 2, &ode};
  std::unique_ptr<gsl_odeiv2_driver, void (*)(gsl_odeiv2_driver*)> driver(
      gsl_odeiv2_driver_alloc_y_new(&sys, gsl_odeiv2_step_msbdf, cfg.r_start, cfg.abs_tol, cfg.rel_tol),
      gsl_odeiv2_driver_free);
  if (!driver) throw std::runtime_error("could not allocate the ODE driver");
  gsl_odeiv2_driver_set_nmax(driver.get(), 1000000);

  const double N = m.dimension();
  double r = cfg.r_start;
  double x[2] = {1.0 + lambda * r * r / (2.0 * N), lambda * r / N};

  Trajectory tr;
  for (double target : obs) {
    if (target < r) {
      // the pole region is covered by the series
      tr.r.push_back(target);
      tr.v.push_back(1.0 + lambda * target * target / (2.0 * N));
      tr.dv.push_back(lambda * target / N);
      continue;
    }
    if (target > r) {
      const double from = r;
      const int status = gsl_odeiv2_driver_apply(driver.get(), &r, target, x);
      if (status != GSL_SUCCESS) {
        throw NumericalError("shooting failed between r = " + std::to_string(from) + " and " +
                             std::to_string(target) + ": " + gsl_strerror(status));
      }
    }
    if (!std::isfinite(x[0]) || !std::isfinite(x[1])) {
      throw NumericalError("shooting produced a non-finite value near r = " + std::to_string(r));
    }
    tr.r.push_back(target);
    tr.v.push_back(x[0]);
    tr.dv.push_back(x[1]);
    if (x[0] > cap) {
      tr.capped = true;
      break;
    }
  }
  return tr;
}

}  // namespace

ShootingResult linear_shooting(const ModelManifold& m, double lambda, std::optional<double> r_max,
                               const ShootingConfig& cfg) {
  if (!(lambda > 0.0)) throw std::invalid_argument("linear_shooting requires lambda > 0");
  const DoublingPolicy& pol = cfg.policy;
  const double R = std::min({r_max.value_or(pol.last_radius()), m.max_radius()});
  if (!(R > cfg.r_start)) throw std::invalid_argument("linear_shooting: r_max must exceed the series start");

  // Trajectory samples: uniform up to the first truncation, then log-spaced per
  // doubling; every truncation radius is included exactly.
  std::vector<double> obs;
  const int s = std::max(cfg.samples_per_doubling, 2);
  const double first = std::min(pol.first_radius, R);
  for (int i = 1; i <= s; ++i) obs.push_back(first * i / s);
  for (int k = 0; k < pol.doublings; ++k) {
    const double a = pol.truncation(k);
    if (a >= R) break;
    const double b = std::min(pol.truncation(k + 1), R);
    for (int i = 1; i <= s; ++i) obs.push_back(a * std::pow(b / a, static_cast<double>(i) / s));
    obs.back() = b;
  }

  const Trajectory tr = integrate_radial(m, lambda, obs, pol.divergence_cap, cfg);
  ShootingResult out;
  out.lambda = lambda;
  out.radii = tr.r;
  out.values = tr.v;
  out.slopes = tr.dv;

  std::vector<Truncation> trunc;
  for (int k = 0; k <= pol.doublings; ++k) {
    const double Rk = pol.truncation(k);
    for (std::size_t i = 0; i < tr.r.size(); ++i) {
      if (std::abs(tr.r[i] - Rk) <= 1e-12 * Rk) trunc.push_back({Rk, tr.v[i]});
    }
  }
  if (tr.capped && (trunc.empty() || trunc.back().radius < tr.r.back())) {
    trunc.push_back({tr.r.back(), tr.v.back()});
  }
  out.estimate = decide_doubling(std::move(trunc), pol);
  switch (out.estimate.status) {
    case TailStatus::Convergent: out.verdict = ShootingVerdict::Bounded; break;
    case TailStatus::Divergent: out.verdict = ShootingVerdict::Unbounded; break;
    case TailStatus::Undetermined: out.verdict = ShootingVerdict::Undetermined; break;
  }
  out.note = out.estimate.note;
  if (R < pol.last_radius()) {
    out.note += (out.note.empty() ? "" : "; ") + std::string("integration stopped at r = ") + std::to_string(R);
  }
  return out;
}

std::vector<double> shoot_at(const ModelManifold& m, double lambda, const std::vector<double>& radii,
                             const ShootingConfig& cfg) {
  if (!std::is_sorted(radii.begin(), radii.end())) throw std::invalid_argument("shoot_at: radii must increase");
  const Trajectory tr = integrate_radial(m, lambda, radii, kInf, cfg);
  return tr.v;
}

EllipticProfile subsolution_from_linear(const ModelManifold& m, const Nonlinearity& n, const RadialGrid& grid,
                                        const ShootingResult& shot, double tol) {
  if (shot.verdict != ShootingVerdict::Bounded) {
    throw std::invalid_argument("subsolution_from_linear needs a bounded linear solution, got " +
                                to_string(shot.verdict));
  }
  const double sup = shot.sup();
  std::vector<double> radii(grid.centers().begin(), grid.centers().end());
  radii.push_back(grid.radius());
  auto v = shoot_at(m, shot.lambda, radii);
  for (double& x : v) {
    x /= sup;
    if (x >= n.sup_range()) throw std::invalid_argument("subsolution_from_linear: profile reaches sup phi");
  }
  const double boundary = v.back();
  v.pop_back();
  EllipticProfile p{grid, std::move(v), boundary, 0.0, 0, {}};
  const auto base = roundoff(grid, 1.0);
  p.check = sign_check(grid, p.values, p.boundary, [&](double x) { return n.psi(x); },
                       [&](std::size_t i) { return tol + base(i); });
  p.residual = scaled_residual(grid, p.values, p.boundary, [&](double x) { return n.psi(x); });
  return p;
}

std::vector<double> duality_weights(const std::vector<double>& times, double T) {
  std::vector<double> w(times.size(), 0.0);
  double b = 1.0;
  double Z = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (times[k] > T * (1.0 + 1e-12)) break;
    const double dt = times[k] - times[k - 1];
    w[k] = b * dt;
    Z += w[k];
    b /= 1.0 + dt;
  }
  if (!(Z > 0.0)) throw std::invalid_argument("duality_weights: no time step inside (0, T]");
  for (double& x : w) x /= Z;
  return w;
}

namespace {

void require_same_layout(const SpaceTimeField& a, const SpaceTimeField& b) {
  if (a.grid.cells() != b.grid.cells() || a.times != b.times) {
    throw std::invalid_argument("duality_subsolution: fields must share grid and time steps");
  }
  for (std::size_t i = 0; i < a.grid.cells(); ++i) {
    if (std::abs(a.grid.centers()[i] - b.grid.centers()[i]) > 1e-12 * (1.0 + a.grid.centers()[i])) {
      throw std::invalid_argument("duality_subsolution: fields must share grid and time steps");
    }
  }
}

double max_step(const std::vector<double>& times, double T) {
  double dt = 0.0;
  for (std::size_t k = 1; k < times.size() && times[k] <= T * (1.0 + 1e-12); ++k) {
    dt = std::max(dt, times[k] - times[k - 1]);
  }
  return dt;
}

}  // namespace

EllipticProfile duality_subsolution(const SpaceTimeField& u_star, const SpaceTimeField& u, const Nonlinearity& n,
                                    double T, double order_tol) {
  require_same_layout(u_star, u);
  const std::size_t M = u.grid.cells();
  for (std::size_t i = 0; i < M; ++i) {
    if (std::abs(u_star.datum[i] - u.datum[i]) > order_tol * (1.0 + u.datum[i])) {
      throw std::invalid_argument("duality_subsolution: fields have different initial data");
    }
  }
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    for (std::size_t i = 0; i < M; ++i) {
      if (u_star.values[k][i] < u.values[k][i] - order_tol * (1.0 + u.values[k][i])) {
        std::ostringstream os;
        os << "duality_subsolution: u* < u at t = " << u.times[k] << ", r = " << u.grid.centers()[i];
        throw std::invalid_argument(os.str());
      }
    }
  }

  const auto weights = duality_weights(u.times, T);
  std::vector<double> W(M, 0.0);
  double boundary = 0.0;
  for (std::size_t k = 1; k < weights.size(); ++k) {
    if (weights[k] == 0.0) continue;
    for (std::size_t i = 0; i < M; ++i) W[i] += weights[k] * (n.phi(u_star.values[k][i]) - n.phi(u.values[k][i]));
    boundary += weights[k] * (n.phi(u_star.boundary_trace[k]) - n.phi(u.boundary_trace[k]));
  }
  for (double& x : W) x = std::max(x, 0.0);
  boundary = std::max(boundary, 0.0);

  EllipticProfile p{u.grid, std::move(W), boundary, 0.0, 0, {}};
  const double dt_max = max_step(u.times, T);
  double scale = 0.0;
  for (std::size_t k = 0; k < u_star.values.size(); ++k) {
    for (double x : u_star.values[k]) scale = std::max(scale, n.phi(x));
  }
  const auto base = roundoff(u.grid, std::max(scale, 1e-12));
  auto psi = [&](double x) { return n.psi(x); };
  p.check = sign_check(u.grid, p.values, p.boundary, psi,
                       [&](std::size_t i) { return dt_max * n.psi(p.values[i]) + base(i); });
  if (u_star.diagnostics.dt_retries > 0 || u.diagnostics.dt_retries > 0) {
    p.check.note += (p.check.note.empty() ? "" : "; ") +
                    std::string("some stored steps were split, the discrete identity is approximate");
  }
  p.residual = scaled_residual(u.grid, p.values, p.boundary, psi);
  return p;
}

ConstantSplitting constant_splitting_subsolution(const SpaceTimeField& u_star, double c, const Nonlinearity& n,
                                                 double T) {
  if (!(c > 0.0)) throw std::invalid_argument("constant_splitting_subsolution requires c > 0");
  const double dphi = n.phi_prime(c);
  if (!(dphi > 0.0) || !std::isfinite(dphi)) {
    throw std::invalid_argument("constant_splitting_subsolution requires 0 < phi'(c) < inf");
  }
  const std::size_t M = u_star.grid.cells();
  for (std::size_t i = 0; i < M; ++i) {
    if (std::abs(u_star.datum[i] - c) > 1e-9 * (1.0 + c)) {
      throw std::invalid_argument("constant_splitting_subsolution: datum is not the constant c");
    }
  }
  const double lambda = 1.0 / dphi;
  const double phic = n.phi(c);

  const auto weights = duality_weights(u_star.times, T);
  std::vector<double> V(M, 0.0);
  double boundary = 0.0;
  for (std::size_t k = 1; k < weights.size(); ++k) {
    if (weights[k] == 0.0) continue;
    for (std::size_t i = 0; i < M; ++i) V[i] += weights[k] * (n.phi(u_star.values[k][i]) - phic);
    boundary += weights[k] * (n.phi(u_star.boundary_trace[k]) - phic);
  }
  ConstantSplitting out{EllipticProfile{u_star.grid, std::move(V), boundary, 0.0, 0, {}}, lambda};
  auto& p = out.profile;
  const double dt_max = max_step(u_star.times, T);
  double scale = 0.0;
  for (const auto& row : u_star.values) {
    for (double x : row) scale = std::max(scale, n.phi(x));
  }
  const auto base = roundoff(u_star.grid, std::max(scale, 1e-12));
  auto rhs = [lambda](double x) { return lambda * x; };
  p.check = sign_check(u_star.grid, p.values, p.boundary, rhs, [&](std::size_t i) {
    return lambda * dt_max * std::max(p.values[i], 0.0) + base(i);
  });
  p.residual = scaled_residual(u_star.grid, p.values, p.boundary, rhs);
  return out;
}

double splitting_boundary(const Nonlinearity& n, double w_sup, double t) {
  return n.psi(std::min(0.5 * std::exp(0.5 * t), 1.0) * w_sup);
}

}  // namespace stochlab
