#include "stochlab/cli/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace stochlab::cli {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json& object_at(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  return j;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError(join(path, it.key()), "unknown field");
  }
}

double as_number(const json& v, const std::string& path, bool allow_inf = false) {
  if (v.is_number()) return v.get<double>();
  if (allow_inf && v.is_string() && (v == "inf" || v == "infinity")) return kInf;
  throw ConfigError(path, allow_inf ? "expected a number or \"infinity\"" : "expected a number");
}

double number(const json& obj, const std::string& key, const std::string& path, std::optional<double> def = {},
              bool allow_inf = false) {
  if (!obj.contains(key)) {
    if (def) return *def;
    throw ConfigError(join(path, key), "required field is missing");
  }
  return as_number(obj.at(key), join(path, key), allow_inf);
}

int integer(const json& obj, const std::string& key, const std::string& path, std::optional<int> def = {}) {
  if (!obj.contains(key)) {
    if (def) return *def;
    throw ConfigError(join(path, key), "required field is missing");
  }
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  return v.get<int>();
}

std::string text(const json& obj, const std::string& key, const std::string& path,
                 std::optional<std::string> def = {}) {
  if (!obj.contains(key)) {
    if (def) return *def;
    throw ConfigError(join(path, key), "required field is missing");
  }
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& obj, const std::string& key, const std::string& path,
                            std::optional<std::vector<double>> def = {}) {
  if (!obj.contains(key)) {
    if (def) return *def;
    throw ConfigError(join(path, key), "required field is missing");
  }
  const json& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(join(path, key), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_number(v[i], join(path, key) + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// Runs a module constructor, turning its validation error into a field error.
template <class F>
auto guarded(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& ex) {
    throw ConfigError(path, ex.what());
  }
}

SolverConfig parse_solver(const json& j, const std::string& path) {
  object_at(j, path);
  reject_unknown(j,
                 {"dt_initial", "dt_growth", "dt_max", "dt_min", "newton_tol", "newton_max_iter", "lifting",
                  "extrapolation", "exhaustion_radii", "spacing", "probe_radii", "cauchy_tol", "horizon_cap",
                  "restart_at", "parallel"},
                 path);
  SolverConfig c;
  c.dt_initial = number(j, "dt_initial", path, c.dt_initial);
  c.dt_growth = number(j, "dt_growth", path, c.dt_growth);
  c.dt_max = number(j, "dt_max", path, c.dt_max);
  c.dt_min = number(j, "dt_min", path, c.dt_min);
  c.newton_tol = number(j, "newton_tol", path, c.newton_tol);
  c.newton_max_iter = integer(j, "newton_max_iter", path, c.newton_max_iter);
  c.lifting = numbers(j, "lifting", path, c.lifting);
  const std::string ex = text(j, "extrapolation", path, "direct");
  if (ex == "last") {
    c.extrapolation = Extrapolation::Last;
  } else if (ex == "richardson") {
    c.extrapolation = Extrapolation::Richardson;
  } else if (ex == "direct") {
    c.extrapolation = Extrapolation::Direct;
  } else {
    throw ConfigError(join(path, "extrapolation"), "expected one of last, richardson, direct");
  }
  c.exhaustion_radii = numbers(j, "exhaustion_radii", path, c.exhaustion_radii);
  c.spacing = number(j, "spacing", path, c.spacing);
  c.probe_radii = numbers(j, "probe_radii", path, c.probe_radii);
  c.cauchy_tol = number(j, "cauchy_tol", path, c.cauchy_tol);
  c.horizon_cap = number(j, "horizon_cap", path, c.horizon_cap);
  if (j.contains("restart_at")) c.restart_at = number(j, "restart_at", path);
  if (j.contains("parallel")) {
    if (!j.at("parallel").is_boolean()) throw ConfigError(join(path, "parallel"), "expected a boolean");
    c.parallel = j.at("parallel").get<bool>();
  }
  guarded(path, [&] {
    c.validate();
    return 0;
  });
  return c;
}

ClassifierConfig parse_classifier(const json& j, const std::string& path) {
  object_at(j, path);
  reject_unknown(j,
                 {"r0", "first_radius", "doublings", "ratio_threshold", "min_consecutive", "divergence_cap",
                  "flat_tolerance", "curvature_constant", "sweep_step"},
                 path);
  ClassifierConfig c;
  c.r0 = number(j, "r0", path, c.r0);
  c.policy.first_radius = number(j, "first_radius", path, c.policy.first_radius);
  c.policy.doublings = integer(j, "doublings", path, c.policy.doublings);
  c.policy.ratio_threshold = number(j, "ratio_threshold", path, c.policy.ratio_threshold);
  c.policy.min_consecutive = integer(j, "min_consecutive", path, c.policy.min_consecutive);
  c.policy.divergence_cap = number(j, "divergence_cap", path, c.policy.divergence_cap);
  c.policy.flat_tolerance = number(j, "flat_tolerance", path, c.policy.flat_tolerance);
  c.curvature_constant = number(j, "curvature_constant", path, c.curvature_constant);
  c.sweep_step = number(j, "sweep_step", path, c.sweep_step);
  if (!(c.r0 > 0.0)) throw ConfigError(join(path, "r0"), "must be > 0");
  if (!(c.policy.first_radius > c.r0)) throw ConfigError(join(path, "first_radius"), "must exceed r0");
  if (c.policy.doublings < 1) throw ConfigError(join(path, "doublings"), "must be >= 1");
  if (!(c.policy.ratio_threshold > 0.0 && c.policy.ratio_threshold < 1.0)) {
    throw ConfigError(join(path, "ratio_threshold"), "must lie in (0, 1)");
  }
  if (c.policy.min_consecutive < 1) throw ConfigError(join(path, "min_consecutive"), "must be >= 1");
  if (!(c.policy.divergence_cap > 0.0)) throw ConfigError(join(path, "divergence_cap"), "must be > 0");
  if (!(c.sweep_step > 0.0 && c.sweep_step < 1.0)) throw ConfigError(join(path, "sweep_step"), "must lie in (0, 1)");
  return c;
}

DatumSpec parse_datum(const json& j, const std::string& path) {
  object_at(j, path);
  DatumSpec d;
  const std::string kind = text(j, "kind", path);
  if (kind == "constant") {
    reject_unknown(j, {"kind", "value"}, path);
    d.kind = DatumSpec::Kind::Constant;
    d.amplitude = number(j, "value", path);
  } else if (kind == "gaussian" || kind == "bump") {
    reject_unknown(j, {"kind", "amplitude", "width"}, path);
    d.kind = kind == "gaussian" ? DatumSpec::Kind::Gaussian : DatumSpec::Kind::Bump;
    d.amplitude = number(j, "amplitude", path);
    d.width = number(j, "width", path);
    if (!(d.width > 0.0)) throw ConfigError(join(path, "width"), "must be > 0");
  } else if (kind == "sinc") {
    reject_unknown(j, {"kind", "amplitude"}, path);
    d.kind = DatumSpec::Kind::Sinc;
    d.amplitude = number(j, "amplitude", path, 1.0);
  } else if (kind == "table") {
    reject_unknown(j, {"kind", "r", "u"}, path);
    d.kind = DatumSpec::Kind::Table;
    d.r = numbers(j, "r", path);
    d.u = numbers(j, "u", path);
    if (d.r.size() < 2 || d.r.size() != d.u.size()) {
      throw ConfigError(join(path, "u"), "table needs >= 2 points and matching r/u sizes");
    }
    for (std::size_t i = 1; i < d.r.size(); ++i) {
      if (!(d.r[i] > d.r[i - 1])) throw ConfigError(join(path, "r"), "must be strictly increasing");
    }
    for (double x : d.u) {
      if (!(x >= 0.0)) throw ConfigError(join(path, "u"), "values must be >= 0");
    }
  } else {
    throw ConfigError(join(path, "kind"), "expected one of constant, gaussian, bump, sinc, table");
  }
  if (!(d.amplitude >= 0.0) || !std::isfinite(d.amplitude)) {
    throw ConfigError(join(path, d.kind == DatumSpec::Kind::Constant ? "value" : "amplitude"), "must be finite and >= 0");
  }
  return d;
}

BoundarySpec parse_boundary(const json& j, const std::string& path) {
  object_at(j, path);
  reject_unknown(j, {"mode", "value"}, path);
  BoundarySpec b;
  const std::string mode = text(j, "mode", path);
  if (mode == "zero") {
    b.mode = BoundarySpec::Mode::Zero;
  } else if (mode == "constant") {
    b.mode = BoundarySpec::Mode::Constant;
    b.value = number(j, "value", path);
    if (!(b.value >= 0.0) || !std::isfinite(b.value)) throw ConfigError(join(path, "value"), "must be finite and >= 0");
  } else if (mode == "witness") {
    b.mode = BoundarySpec::Mode::Witness;
  } else {
    throw ConfigError(join(path, "mode"), "expected one of zero, constant, witness");
  }
  return b;
}

ClockParams parse_clock(const json& j, const std::string& path) {
  object_at(j, path);
  reject_unknown(j, {"alpha", "epsilon", "target", "t_max", "samples"}, path);
  ClockParams c;
  c.alpha = number(j, "alpha", path, c.alpha);
  if (j.contains("epsilon")) c.epsilon = number(j, "epsilon", path);
  c.target = number(j, "target", path, c.target);
  c.t_max = number(j, "t_max", path, c.t_max);
  c.samples = integer(j, "samples", path, c.samples);
  if (!(c.t_max > 0.0)) throw ConfigError(join(path, "t_max"), "must be > 0");
  if (c.samples < 2) throw ConfigError(join(path, "samples"), "must be >= 2");
  return c;
}

EllipticSchedule parse_elliptic(const json& j, const std::string& path, double& h) {
  object_at(j, path);
  reject_unknown(j, {"h", "radii", "spacing", "probe_radii", "cauchy_tol", "decay_factor", "floor", "parallel"}, path);
  EllipticSchedule s;
  h = number(j, "h", path, 1.0);
  s.radii = numbers(j, "radii", path, s.radii);
  s.spacing = number(j, "spacing", path, s.spacing);
  s.probe_radii = numbers(j, "probe_radii", path, s.probe_radii);
  s.cauchy_tol = number(j, "cauchy_tol", path, s.cauchy_tol);
  s.decay_factor = number(j, "decay_factor", path, s.decay_factor);
  s.floor = number(j, "floor", path, s.floor);
  if (!(h > 0.0)) throw ConfigError(join(path, "h"), "must be > 0");
  if (s.radii.empty() || !std::is_sorted(s.radii.begin(), s.radii.end())) {
    throw ConfigError(join(path, "radii"), "must be a nonempty increasing list");
  }
  if (!(s.spacing > 0.0)) throw ConfigError(join(path, "spacing"), "must be > 0");
  for (double r : s.probe_radii) {
    if (!(r >= 0.0 && r <= s.radii.front())) {
      throw ConfigError(join(path, "probe_radii"), "probes must lie in [0, smallest radius]");
    }
  }
  if (j.contains("parallel")) {
    if (!j.at("parallel").is_boolean()) throw ConfigError(join(path, "parallel"), "expected a boolean");
    s.parallel = j.at("parallel").get<bool>();
  }
  return s;
}

ShootParams parse_shoot(const json& j, const std::string& path) {
  object_at(j, path);
  reject_unknown(j, {"lambda", "r_max"}, path);
  ShootParams s;
  if (j.contains("lambda")) {
    if (j.at("lambda").is_array()) {
      s.lambdas = numbers(j, "lambda", path);
    } else {
      s.lambdas = {number(j, "lambda", path)};
    }
  }
  if (s.lambdas.empty()) throw ConfigError(join(path, "lambda"), "needs at least one value");
  for (double l : s.lambdas) {
    if (!(l > 0.0)) throw ConfigError(join(path, "lambda"), "values must be > 0");
  }
  if (j.contains("r_max")) {
    s.r_max = number(j, "r_max", path);
    if (!(*s.r_max > 0.0)) throw ConfigError(join(path, "r_max"), "must be > 0");
  }
  return s;
}

bool needs_manifold(Experiment e) { return e != Experiment::Clock; }
bool needs_nonlinearity(Experiment e) { return e != Experiment::Classify && e != Experiment::Shoot; }

}  // namespace

std::string command_name(Experiment e) {
  switch (e) {
    case Experiment::Classify: return "classify";
    case Experiment::Solve: return "solve";
    case Experiment::DemoNonuniqueness: return "demo-nonuniqueness";
    case Experiment::DemoElliptic: return "demo-elliptic";
    case Experiment::MassAudit: return "mass-audit";
    case Experiment::Shoot: return "shoot";
    case Experiment::Clock: return "clock";
  }
  return "classify";
}

std::string config_name(Experiment e) {
  std::string s = command_name(e);
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

std::optional<Experiment> parse_experiment(const std::string& name) {
  for (auto e : {Experiment::Classify, Experiment::Solve, Experiment::DemoNonuniqueness, Experiment::DemoElliptic,
                 Experiment::MassAudit, Experiment::Shoot, Experiment::Clock}) {
    if (name == command_name(e) || name == config_name(e)) return e;
  }
  return std::nullopt;
}

RadialFunction DatumSpec::function() const {
  const double a = amplitude;
  const double w = width;
  switch (kind) {
    case Kind::Constant: return [a](double) { return a; };
    case Kind::Gaussian: return [a, w](double r) { return a * std::exp(-(r * r) / (w * w)); };
    case Kind::Sinc:
      return [a](double r) { return r < 1e-6 ? a * (1.0 - r * r / 6.0) : a * std::sin(r) / r; };
    case Kind::Bump:
      return [a, w](double r) {
        if (r >= w) return 0.0;
        const double s = 1.0 - (r * r) / (w * w);
        return a * s * s;
      };
    case Kind::Table: {
      auto rs = r;
      auto us = u;
      return [rs, us](double x) {
        if (x <= rs.front()) return us.front();
        if (x >= rs.back()) return us.back();
        const auto it = std::upper_bound(rs.begin(), rs.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - rs.begin()) - 1;
        const double t = (x - rs[i]) / (rs[i + 1] - rs[i]);
        return us[i] + t * (us[i + 1] - us[i]);
      };
    }
  }
  return [](double) { return 0.0; };
}

double DatumSpec::sup() const {
  if (kind == Kind::Table) return *std::max_element(u.begin(), u.end());
  return amplitude;
}

ClockSpec Scenario::clock_spec() const {
  if (!nonlinearity) throw ConfigError("nonlinearity", "required field is missing");
  ClockSpec c{*nonlinearity, clock.alpha, 0.1, clock.target};
  c.alpha = clock.alpha;
  c.target = clock.target;
  c.epsilon = clock.epsilon.value_or(std::min(0.1, (clock.target - datum.sup()) / 4.0));
  guarded("clock", [&] {
    c.validate();
    return 0;
  });
  return c;
}

ModelManifold parse_manifold(const json& j, const std::string& path) {
  object_at(j, path);
  const std::string family = text(j, "family", path);
  const int dim = integer(j, "dimension", path);
  if (dim < 2) throw ConfigError(join(path, "dimension"), "must be >= 2");
  if (family == "euclidean") {
    reject_unknown(j, {"family", "dimension"}, path);
    return ModelManifold::euclidean(dim);
  }
  if (family == "hyperbolic") {
    reject_unknown(j, {"family", "dimension", "scale"}, path);
    const double scale = number(j, "scale", path, 1.0);
    if (!(scale > 0.0)) throw ConfigError(join(path, "scale"), "must be > 0");
    return guarded(path, [&] { return ModelManifold::hyperbolic(dim, scale); });
  }
  if (family == "power_exp") {
    reject_unknown(j, {"family", "dimension", "beta", "gamma"}, path);
    const double beta = number(j, "beta", path);
    const double gamma = number(j, "gamma", path);
    if (!(beta >= 2.0)) throw ConfigError(join(path, "beta"), "must be >= 2");
    if (!(gamma > 0.0)) throw ConfigError(join(path, "gamma"), "must be > 0");
    return guarded(path, [&] { return ModelManifold::power_exp(dim, beta, gamma); });
  }
  if (family == "table") {
    reject_unknown(j, {"family", "dimension", "r", "w", "slope_tol"}, path);
    auto r = numbers(j, "r", path);
    auto w = numbers(j, "w", path);
    const double tol = number(j, "slope_tol", path, 1e-2);
    return guarded(path, [&] { return ModelManifold::table(dim, std::move(r), std::move(w), tol); });
  }
  throw ConfigError(join(path, "family"), "expected one of euclidean, hyperbolic, power_exp, table");
}

Nonlinearity parse_nonlinearity(const json& j, const std::string& path) {
  object_at(j, path);
  const std::string kind = text(j, "kind", path);
  if (kind == "power") {
    reject_unknown(j, {"kind", "m"}, path);
    const double m = number(j, "m", path);
    return guarded(path, [&] { return Nonlinearity::power(m); });
  }
  if (kind == "saturating") {
    reject_unknown(j, {"kind"}, path);
    return Nonlinearity::saturating();
  }
  if (kind == "table") {
    reject_unknown(j, {"kind", "u", "phi"}, path);
    auto u = numbers(j, "u", path);
    auto phi = numbers(j, "phi", path);
    return guarded(path, [&] { return Nonlinearity::table(std::move(u), std::move(phi)); });
  }
  throw ConfigError(join(path, "kind"), "expected one of power, saturating, table");
}

Scenario parse_scenario(const json& j, Experiment e) {
  if (!j.is_object()) throw ConfigError("<document>", "expected a JSON object");
  reject_unknown(j,
                 {"description", "experiment", "manifold", "nonlinearity", "solver", "classifier", "clock", "datum",
                  "boundary", "horizon", "radius", "spacing", "elliptic", "shoot", "audit", "output"},
                 "");
  Scenario s;
  s.experiment = e;
  if (j.contains("experiment")) {
    const std::string name = text(j, "experiment", "");
    const auto declared = parse_experiment(name);
    if (!declared) throw ConfigError("experiment", "unknown experiment '" + name + "'");
    if (*declared != e) {
      throw ConfigError("experiment", "config declares '" + name + "' but the command is '" + command_name(e) + "'");
    }
  }
  if (needs_manifold(e) || j.contains("manifold")) {
    if (!j.contains("manifold")) throw ConfigError("manifold", "required field is missing");
    s.manifold_spec = j.at("manifold");
    s.manifold = parse_manifold(j.at("manifold"));
  }
  if (needs_nonlinearity(e) || j.contains("nonlinearity")) {
    if (!j.contains("nonlinearity")) throw ConfigError("nonlinearity", "required field is missing");
    s.nonlinearity = parse_nonlinearity(j.at("nonlinearity"));
  }
  if (j.contains("solver")) s.solver = parse_solver(j.at("solver"), "solver");
  if (j.contains("classifier")) s.classifier = parse_classifier(j.at("classifier"), "classifier");
  if (j.contains("clock")) s.clock = parse_clock(j.at("clock"), "clock");
  if (j.contains("datum")) s.datum = parse_datum(j.at("datum"), "datum");
  if (j.contains("boundary")) s.boundary = parse_boundary(j.at("boundary"), "boundary");
  if (j.contains("elliptic")) s.elliptic = parse_elliptic(j.at("elliptic"), "elliptic", s.elliptic_h);
  if (j.contains("shoot")) s.shoot = parse_shoot(j.at("shoot"), "shoot");
  if (j.contains("audit")) {
    object_at(j.at("audit"), "audit");
    reject_unknown(j.at("audit"), {"balance_tolerance"}, "audit");
    s.balance_tolerance = number(j.at("audit"), "balance_tolerance", "audit", s.balance_tolerance);
  }
  if (j.contains("output")) {
    object_at(j.at("output"), "output");
    reject_unknown(j.at("output"), {"every"}, "output");
    s.output_every = integer(j.at("output"), "every", "output", 1);
    if (s.output_every < 1) throw ConfigError("output.every", "must be >= 1");
  }

  const bool single_ball = e == Experiment::Solve || e == Experiment::MassAudit;
  if (single_ball) {
    s.horizon = number(j, "horizon", "", std::nullopt, true);
    s.radius = number(j, "radius", "");
    s.spacing = number(j, "spacing", "", 1.0 / 16.0);
    if (!(s.horizon > 0.0)) throw ConfigError("horizon", "must be > 0");
    if (!(s.radius > 0.0) || s.radius > s.manifold->max_radius()) {
      throw ConfigError("radius", "must be > 0 and inside the warp's range");
    }
    if (!(s.spacing > 0.0 && s.spacing < s.radius)) throw ConfigError("spacing", "must lie in (0, radius)");
    if (!j.contains("datum")) throw ConfigError("datum", "required field is missing");
    if (!j.contains("boundary")) throw ConfigError("boundary", "required field is missing");
  } else {
    if (j.contains("horizon")) s.horizon = number(j, "horizon", "", std::nullopt, true);
  }
  if (e == Experiment::DemoNonuniqueness || e == Experiment::Clock ||
      (single_ball && s.boundary.mode == BoundarySpec::Mode::Witness)) {
    (void)s.clock_spec();  // validates ε and b against the nonlinearity
  }
  return s;
}

Scenario parse_scenario_text(const std::string& text, Experiment e) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ConfigError("<document>", std::string("malformed JSON: ") + ex.what());
  }
  return parse_scenario(j, e);
}

}  // namespace stochlab::cli
