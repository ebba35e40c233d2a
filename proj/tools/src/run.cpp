#include "stochlab/cli/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "stochlab/cli/emit.hpp"

namespace stochlab::cli {

namespace fs = std::filesystem;

namespace {

json numbers_json(const std::vector<double>& xs) {
  json a = json::array();
  for (double x : xs) a.push_back(finite_or_null(x));
  return a;
}

json truncations_json(const std::vector<Truncation>& ts) {
  json a = json::array();
  for (const auto& t : ts) a.push_back({{"radius", t.radius}, {"partial", finite_or_null(t.partial)}});
  return a;
}

json estimate_json(const IntegralEstimate& e) {
  return {{"status", to_string(e.status)},
          {"limit", e.status == TailStatus::Convergent ? finite_or_null(e.limit) : json(nullptr)},
          {"growth_exponent", e.status == TailStatus::Divergent ? finite_or_null(e.growth_exponent) : json(nullptr)},
          {"truncations", truncations_json(e.truncations)},
          {"note", e.note}};
}

std::string tag(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

json header(const char* kind) { return {{"schema_version", kSchemaVersion}, {"document", kind}}; }

// Every document goes through its own validator before it touches the disk.
void emit_json(const fs::path& path, const json& doc, RunResult& res) {
  const auto problems = validate_document(doc);
  if (!problems.empty()) throw std::logic_error("internal: invalid " + path.filename().string() + ": " + problems.front());
  write_json(path, doc);
  res.files.push_back(path);
}

const ModelManifold& manifold(const Scenario& s) {
  if (!s.manifold) throw ConfigError("manifold", "required field is missing");
  return *s.manifold;
}

const Nonlinearity& nonlinearity(const Scenario& s) {
  if (!s.nonlinearity) throw ConfigError("nonlinearity", "required field is missing");
  return *s.nonlinearity;
}

void write_field_csv(const fs::path& path, const SpaceTimeField& f, int every, RunResult& res) {
  CsvWriter csv(path, {"t", "r", "u"});
  const auto centers = f.grid.centers();
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    if (k % static_cast<std::size_t>(every) != 0 && k + 1 != f.values.size()) continue;
    for (std::size_t i = 0; i < centers.size(); ++i) csv.row({f.times[k], centers[i], f.values[k][i]});
  }
  csv.close();
  res.files.push_back(path);
}

void write_mass_csv(const fs::path& path, const MassSeries& ms, RunResult& res) {
  CsvWriter csv(path, {"t", "mass", "boundary_flux_integral", "balance_residual"});
  for (std::size_t k = 0; k < ms.times.size(); ++k) {
    csv.row({ms.times[k], ms.mass[k], ms.boundary_flux_integral[k], ms.balance_residual[k]});
  }
  csv.close();
  res.files.push_back(path);
}

// --- classify ----------------------------------------------------------------------

json classify_json(const Scenario& s, const ClassifierVerdict& v) {
  json doc = header("classify");
  doc["manifold"] = s.manifold_spec;
  doc["verdict"] = to_string(v.verdict);
  doc["conflict"] = v.conflict;
  json ev = json::array();
  for (const auto& e : v.evidence) {
    json item = {{"criterion", e.criterion}, {"outcome", to_string(e.outcome)}, {"note", e.note}};
    if (e.estimate) {
      item["status"] = to_string(e.estimate->status);
      double value = e.estimate->limit;
      if (e.estimate->status != TailStatus::Convergent) {
        value = e.estimate->truncations.empty() ? kInf : e.estimate->truncations.back().partial;
      }
      item["value"] = finite_or_null(value);
      item["truncations"] = truncations_json(e.estimate->truncations);
    } else {
      item["status"] = "none";
      item["value"] = nullptr;
      item["truncations"] = json::array();
    }
    ev.push_back(std::move(item));
  }
  doc["evidence"] = std::move(ev);
  return doc;
}

RunResult run_classify(const Scenario& s, const fs::path& out) {
  RunResult res;
  const auto v = classify(manifold(s), s.classifier);
  emit_json(out / "verdict.json", classify_json(s, v), res);
  res.message = "verdict: " + to_string(v.verdict) + (v.conflict ? " (conflicting evidence)" : "");
  res.exit_code = v.verdict == Verdict::Undetermined ? kExitUndetermined : kExitDecided;
  return res;
}

// --- clock -------------------------------------------------------------------------

RunResult run_clock(const Scenario& s, const fs::path& out) {
  RunResult res;
  const ClockSpec spec = s.clock_spec();
  const double u0_sup = s.datum.sup();
  if (s.clock.samples < 2) throw ConfigError("clock.samples", "must be >= 2");
  if (!(s.clock.t_max > 0.0)) throw ConfigError("clock.t_max", "must be > 0");
  {
    CsvWriter csv(out / "clock.csv", {"t", "f", "witness_boundary"});
    for (int k = 0; k < s.clock.samples; ++k) {
      const double t = s.clock.t_max * k / (s.clock.samples - 1);
      csv.row({t, clock_f(spec, t), witness_boundary(spec, u0_sup, t)});
    }
    csv.close();
    res.files.push_back(out / "clock.csv");
  }
  json doc = header("clock");
  doc["nonlinearity"] = nonlinearity(s).describe();
  doc["alpha"] = spec.alpha;
  doc["epsilon"] = spec.epsilon;
  doc["target"] = *spec.target;
  doc["exceedance_time"] = nullptr;
  if (*spec.target > 2.0 * spec.epsilon) {
    const auto S = time_to_exceed(spec);
    doc["exceedance_time"] = finite_or_null(S.time);
    doc["unit_rate_time"] = finite_or_null(S.unit_rate_time);
  }
  emit_json(out / "clock.json", doc, res);
  res.message = "clock table written";
  return res;
}

// --- shoot -------------------------------------------------------------------------

RunResult run_shoot(const Scenario& s, const fs::path& out) {
  RunResult res;
  const auto& m = manifold(s);
  ShootingConfig cfg;
  cfg.policy = s.classifier.policy;
  json results = json::array();
  bool any_bounded = false;
  bool any_unbounded = false;
  bool any_undetermined = false;
  for (double lambda : s.shoot.lambdas) {
    spdlog::info("shooting at lambda = {}", lambda);
    const auto shot = linear_shooting(m, lambda, s.shoot.r_max, cfg);
    const fs::path csv_path = out / ("shoot_lambda_" + tag(lambda) + ".csv");
    CsvWriter csv(csv_path, {"r", "v", "dv"});
    for (std::size_t i = 0; i < shot.radii.size(); ++i) csv.row({shot.radii[i], shot.values[i], shot.slopes[i]});
    csv.close();
    res.files.push_back(csv_path);
    any_bounded = any_bounded || shot.verdict == ShootingVerdict::Bounded;
    any_unbounded = any_unbounded || shot.verdict == ShootingVerdict::Unbounded;
    any_undetermined = any_undetermined || shot.verdict == ShootingVerdict::Undetermined;
    results.push_back({{"lambda", lambda},
                       {"verdict", to_string(shot.verdict)},
                       {"sup", finite_or_null(shot.sup())},
                       {"estimate", estimate_json(shot.estimate)},
                       {"note", shot.note}});
  }
  // Boundedness does not depend on λ > 0, so a mixed answer is itself undetermined.
  ShootingVerdict overall = ShootingVerdict::Undetermined;
  if (!any_undetermined && any_bounded != any_unbounded) {
    overall = any_bounded ? ShootingVerdict::Bounded : ShootingVerdict::Unbounded;
  }
  json doc = header("shoot");
  doc["manifold"] = s.manifold_spec;
  doc["verdict"] = to_string(overall);
  doc["results"] = std::move(results);
  emit_json(out / "shoot.json", doc, res);
  res.message = "shooting: " + to_string(overall);
  res.exit_code = overall == ShootingVerdict::Undetermined ? kExitUndetermined : kExitDecided;
  return res;
}

// --- demo-elliptic -----------------------------------------------------------------

RunResult run_demo_elliptic(const Scenario& s, const fs::path& out) {
  RunResult res;
  const auto& m = manifold(s);
  const auto& n = nonlinearity(s);
  spdlog::info("elliptic exhaustion on {} with {}", m.describe(), n.describe());
  const auto ex = exhaustion_limit(m, n, s.elliptic_h, s.elliptic);
  std::vector<double> residuals;
  for (std::size_t j = 0; j < ex.profiles.size(); ++j) {
    const auto& p = ex.profiles[j];
    residuals.push_back(p.residual);
    const fs::path path = out / ("elliptic_R" + tag(ex.radii[j]) + ".csv");
    CsvWriter csv(path, {"r", "W"});
    const auto centers = p.grid.centers();
    for (std::size_t i = 0; i < centers.size(); ++i) csv.row({centers[i], p.values[i]});
    csv.close();
    res.files.push_back(path);
  }

  ShootingConfig scfg;
  scfg.policy = s.classifier.policy;
  const auto shot = linear_shooting(m, 1.0, std::nullopt, scfg);

  const bool decided = ex.verdict != ExhaustionVerdict::Undetermined && shot.verdict != ShootingVerdict::Undetermined;
  const bool agree = (ex.verdict == ExhaustionVerdict::Nontrivial) == (shot.verdict == ShootingVerdict::Bounded);
  const bool coherent = !decided || agree;

  json probes = json::array();
  for (const auto& row : ex.probe_values) probes.push_back(numbers_json(row));
  json doc = header("demo_elliptic");
  doc["manifold"] = s.manifold_spec;
  doc["nonlinearity"] = n.describe();
  doc["h"] = s.elliptic_h;
  doc["verdict"] = to_string(ex.verdict);
  doc["radii"] = numbers_json(ex.radii);
  doc["probe_radii"] = numbers_json(ex.probe_radii);
  doc["probe_values"] = std::move(probes);
  doc["relative_changes"] = numbers_json(ex.relative_changes);
  doc["decay_ratios"] = numbers_json(ex.decay_ratios);
  doc["monotone_in_radius"] = ex.monotone_in_radius;
  doc["worst_order_violation"] = ex.worst_order_violation;
  doc["residuals"] = numbers_json(residuals);
  doc["shooting"] = {{"lambda", 1.0},
                     {"verdict", to_string(shot.verdict)},
                     {"sup", finite_or_null(shot.sup())},
                     {"estimate", estimate_json(shot.estimate)}};
  doc["coherent"] = coherent;
  emit_json(out / "elliptic.json", doc, res);

  res.message = "elliptic limit: " + to_string(ex.verdict) + ", shooting: " + to_string(shot.verdict);
  if (!coherent) {
    res.exit_code = kExitError;
    res.message += " (incoherent)";
  } else if (ex.verdict == ExhaustionVerdict::Undetermined) {
    res.exit_code = kExitUndetermined;
  }
  return res;
}

// --- solve / mass-audit ------------------------------------------------------------

struct BallRun {
  RadialGrid grid;
  SpaceTimeField field;
};

BallRun solve_ball(const Scenario& s) {
  const auto& m = manifold(s);
  const auto& n = nonlinearity(s);
  RadialGrid grid = make_grid_with_spacing(m, s.radius, s.spacing);
  TimeFunction g;
  switch (s.boundary.mode) {
    case BoundarySpec::Mode::Zero: g = [](double) { return 0.0; }; break;
    case BoundarySpec::Mode::Constant: {
      const double c = s.boundary.value;
      g = [c](double) { return c; };
      break;
    }
    case BoundarySpec::Mode::Witness: {
      const ClockSpec spec = s.clock_spec();
      const double u0_sup = s.datum.sup();
      g = [spec, u0_sup](double t) { return witness_boundary(spec, u0_sup, t); };
      break;
    }
  }
  spdlog::info("solving on B_{} of {} ({} cells)", s.radius, m.describe(), grid.cells());
  auto field = solve_dirichlet(m, n, grid, s.datum.function(), g, s.horizon, s.solver);
  return {grid, std::move(field)};
}

json diagnostics_json(const SolveDiagnostics& d) {
  return {{"steps", d.steps},
          {"max_newton_iterations", d.max_newton_iterations},
          {"dt_retries", d.dt_retries},
          {"ladder_monotone", d.ladder_monotone},
          {"ladder_worst_violation", d.ladder_worst_violation},
          {"horizon_truncated", d.horizon_truncated}};
}

RunResult run_solve(const Scenario& s, const fs::path& out) {
  RunResult res;
  const auto run = solve_ball(s);
  const auto& f = run.field;
  write_field_csv(out / "solution.csv", f, s.output_every, res);
  const auto ms = mass_series(f);
  write_mass_csv(out / "mass.csv", ms, res);

  const auto weak = weak_residual(f, manifold(s), nonlinearity(s), standard_test_family(s.radius));
  const double bound = 5.0 * (weak.h + weak.dt);

  json doc = header("solve");
  doc["manifold"] = s.manifold_spec;
  doc["nonlinearity"] = nonlinearity(s).describe();
  doc["horizon"] = f.horizon();
  doc["radius"] = s.radius;
  doc["cells"] = f.grid.cells();
  doc["steps"] = f.steps();
  doc["lifting"] = f.lifting;
  doc["sup"] = f.sup();
  doc["mass_log_scale"] = ms.log_scale;
  doc["max_balance_residual"] = ms.max_balance_residual();
  doc["weak"] = {{"max_normalized", weak.max_normalized()},
                 {"max_residual", weak.max_residual},
                 {"bound", bound},
                 {"h", weak.h},
                 {"dt", weak.dt},
                 {"passed", weak.max_normalized() <= bound}};
  doc["diagnostics"] = diagnostics_json(f.diagnostics);
  emit_json(out / "summary.json", doc, res);
  res.message = "solved to t = " + format_number(f.horizon()) + " in " + std::to_string(f.steps()) + " steps";
  return res;
}

RunResult run_mass_audit(const Scenario& s, const fs::path& out) {
  RunResult res;
  const auto run = solve_ball(s);
  if (run.field.inflow.empty()) {
    throw ConfigError("solver.extrapolation",
                      "the mass audit needs an actual solve; use \"direct\" or \"last\", not \"richardson\"");
  }
  const auto ms = mass_series(run.field);
  write_mass_csv(out / "mass.csv", ms, res);
  const double worst = ms.max_balance_residual();
  const bool passed = worst <= s.balance_tolerance;
  json doc = header("mass_audit");
  doc["manifold"] = s.manifold_spec;
  doc["nonlinearity"] = nonlinearity(s).describe();
  doc["steps"] = run.field.steps();
  doc["mass_log_scale"] = ms.log_scale;
  doc["final_mass"] = finite_or_null(ms.mass.back());
  doc["final_flux_integral"] = finite_or_null(ms.boundary_flux_integral.back());
  doc["max_balance_residual"] = worst;
  doc["tolerance"] = s.balance_tolerance;
  doc["passed"] = passed;
  emit_json(out / "audit.json", doc, res);
  res.message = "max balance residual " + format_number(worst) + (passed ? " (pass)" : " (exceeds tolerance)");
  res.exit_code = passed ? kExitDecided : kExitError;
  return res;
}

// --- demo-nonuniqueness ------------------------------------------------------------

json exhaustion_json(const ExhaustionResult& ex) {
  json probes = json::array();
  for (const auto& row : ex.probe_values) probes.push_back(numbers_json(row));
  return {{"status", to_string(ex.status)},
          {"radii", numbers_json(ex.radii)},
          {"probe_values", std::move(probes)},
          {"relative_changes", numbers_json(ex.relative_changes)},
          {"decay_ratios", numbers_json(ex.decay_ratios)},
          {"monotone_in_radius", ex.monotone_in_radius},
          {"worst_order_violation", ex.worst_order_violation},
          {"sup", ex.limit ? ex.limit->sup() : 0.0}};
}

RunResult run_demo_nonuniqueness(const Scenario& s, const fs::path& out) {
  RunResult res;
  const auto& m = manifold(s);
  const auto& n = nonlinearity(s);

  spdlog::info("classifying {}", m.describe());
  const auto cls = classify(m, s.classifier);

  const ClockSpec spec = s.clock_spec();
  const auto S = time_to_exceed(spec);
  spdlog::info("exceedance time S = {}", S.time);

  const auto u0 = s.datum.function();
  const auto minimal = minimal_solution(m, n, u0, S.time, s.solver);
  const auto witness = witness_solution(m, n, u0, S.time, spec, s.solver);
  const GapReport gap =
      nonuniqueness_gap(*minimal.limit, *witness.limit, S.time, s.solver.probe_radii, s.solver.cauchy_tol);

  {
    CsvWriter csv(out / "probes.csv", {"radius", "probe", "minimal", "witness"});
    for (std::size_t j = 0; j < witness.radii.size(); ++j) {
      for (std::size_t p = 0; p < witness.probe_radii.size(); ++p) {
        csv.row({witness.radii[j], witness.probe_radii[p], minimal.probe_values[j][p], witness.probe_values[j][p]});
      }
    }
    csv.close();
    res.files.push_back(out / "probes.csv");
  }
  write_field_csv(out / "witness_limit.csv", *witness.limit, s.output_every, res);

  // Duality subsolution and its elliptic closure.
  json duality = nullptr;
  json closure = nullptr;
  bool below_tolerance = false;
  bool closure_nontrivial = false;
  std::optional<EllipticProfile> lower;
  std::optional<EllipticProfile> closed;
  try {
    lower = duality_subsolution(*witness.limit, *minimal.limit, n, S.time);
  } catch (const std::invalid_argument& e) {
    spdlog::warn("duality subsolution unavailable: {}", e.what());
  }
  if (lower) {
    const double psi_sup = n.psi(lower->sup());
    below_tolerance = psi_sup <= 1e-3 * *spec.target;
    duality = {{"sup", lower->sup()},
               {"psi_sup", psi_sup},
               {"below_tolerance", below_tolerance},
               {"sign_check", lower->check.passed},
               {"worst_defect", lower->check.worst_defect},
               {"tolerance", lower->check.tolerance},
               {"note", lower->check.note}};
    if (lower->check.passed && !below_tolerance) {
      try {
        closed = monotone_iteration(m, n, lower->grid, *lower, constant_profile(lower->grid, lower->sup()));
        closure_nontrivial = n.psi(closed->values.front()) > 1e-3 * *spec.target;
        closure = {{"iterations", closed->iterations},
                   {"residual", closed->residual},
                   {"sup", closed->sup()},
                   {"at_pole", closed->values.front()},
                   {"lower_at_pole", lower->values.front()},
                   {"nontrivial", closure_nontrivial}};
      } catch (const NumericalError& e) {
        spdlog::warn("monotone iteration failed: {}", e.what());
        closure = {{"error", e.what()}};
      }
    }
    CsvWriter csv(out / "duality.csv", {"r", "w_lower", "w_closure"});
    const auto centers = lower->grid.centers();
    for (std::size_t i = 0; i < centers.size(); ++i) {
      csv.row({centers[i], lower->values[i], closed ? closed->values[i] : std::nan("")});
    }
    csv.close();
    res.files.push_back(out / "duality.csv");
  }

  std::string verdict = "undetermined";
  if (gap.witnessed && witness.status == ExhaustionStatus::Converged) verdict = "nonunique";
  if (!gap.witnessed && witness.status == ExhaustionStatus::Decaying) verdict = "unique";

  // nonunique ⇔ incomplete ⇔ nontrivial elliptic closure
  bool coherent = true;
  if (verdict != "undetermined") {
    const bool nonunique = verdict == "nonunique";
    if (cls.verdict != Verdict::Undetermined) coherent = coherent && nonunique == (cls.verdict == Verdict::Incomplete);
    if (nonunique) coherent = coherent && closure_nontrivial;
    if (!nonunique && lower) coherent = coherent && below_tolerance;
  }

  json doc = header("demo_nonuniqueness");
  doc["manifold"] = s.manifold_spec;
  doc["nonlinearity"] = n.describe();
  doc["verdict"] = verdict;
  doc["classification"] = to_string(cls.verdict);
  doc["clock"] = {{"alpha", spec.alpha},
                  {"epsilon", spec.epsilon},
                  {"target", *spec.target},
                  {"exceedance_time", S.time}};
  doc["minimal"] = exhaustion_json(minimal);
  doc["witness"] = exhaustion_json(witness);
  doc["gap"] = {{"time", gap.time},
                {"datum_sup", gap.datum_sup},
                {"witness_sup", gap.witness_sup},
                {"excess", gap.excess},
                {"difference", gap.difference},
                {"tolerance", gap.tolerance},
                {"witnessed", gap.witnessed}};
  doc["duality"] = std::move(duality);
  doc["closure"] = std::move(closure);
  doc["coherent"] = coherent;
  emit_json(out / "evidence.json", doc, res);

  res.message = "verdict: " + verdict + " (classifier: " + to_string(cls.verdict) +
                ", witnessed: " + (gap.witnessed ? "true" : "false") + ")";
  if (!coherent) {
    res.exit_code = kExitError;
    res.message += " (incoherent)";
  } else if (verdict == "undetermined") {
    res.exit_code = kExitUndetermined;
  }
  return res;
}

}  // namespace

RunResult run(const Scenario& s, const fs::path& out_dir) {
  if (!fs::is_directory(out_dir)) throw std::runtime_error("output directory does not exist: " + out_dir.string());
  switch (s.experiment) {
    case Experiment::Classify: return run_classify(s, out_dir);
    case Experiment::Solve: return run_solve(s, out_dir);
    case Experiment::DemoNonuniqueness: return run_demo_nonuniqueness(s, out_dir);
    case Experiment::DemoElliptic: return run_demo_elliptic(s, out_dir);
    case Experiment::MassAudit: return run_mass_audit(s, out_dir);
    case Experiment::Shoot: return run_shoot(s, out_dir);
    case Experiment::Clock: return run_clock(s, out_dir);
  }
  throw std::logic_error("unknown experiment");
}

}  // namespace stochlab::cli
