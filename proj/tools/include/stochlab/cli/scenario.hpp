#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stochlab/classifier.hpp"
#include "stochlab/clock.hpp"
#include "stochlab/elliptic.hpp"
#include "stochlab/geometry.hpp"
#include "stochlab/nonlinearity.hpp"
#include "stochlab/parabolic.hpp"

namespace stochlab::cli {

using nlohmann::json;

/// A config problem, with the dotted path of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Experiment { Classify, Solve, DemoNonuniqueness, DemoElliptic, MassAudit, Shoot, Clock };

/// Subcommand spelling (hyphenated) and config spelling (underscored).
std::string command_name(Experiment e);
std::string config_name(Experiment e);
std::optional<Experiment> parse_experiment(const std::string& name);

/// Initial datum u0(r).
struct DatumSpec {
  enum class Kind { Constant, Gaussian, Sinc, Bump, Table } kind = Kind::Constant;
  double amplitude = 0.0;  // value for Constant
  double width = 1.0;      // Gaussian width, Bump radius
  std::vector<double> r;   // Table
  std::vector<double> u;

  RadialFunction function() const;
  double sup() const;
};

struct BoundarySpec {
  enum class Mode { Zero, Constant, Witness } mode = Mode::Zero;
  double value = 0.0;
};

struct ClockParams {
  double alpha = 1.0;
  std::optional<double> epsilon;  // default: min(0.1, (b − ‖u0‖∞)/4)
  double target = 1.0;            // b
  double t_max = 10.0;            // clock table range
  int samples = 101;
};

struct ShootParams {
  std::vector<double> lambdas = {1.0};
  std::optional<double> r_max;
};

struct Scenario {
  Experiment experiment = Experiment::Classify;
  json manifold_spec;
  std::optional<ModelManifold> manifold;
  std::optional<Nonlinearity> nonlinearity;
  SolverConfig solver;
  ClassifierConfig classifier;
  ClockParams clock;
  DatumSpec datum;
  BoundarySpec boundary;
  double horizon = 1.0;      // may be +inf
  double radius = 8.0;       // single-ball runs
  double spacing = 1.0 / 16.0;
  double elliptic_h = 1.0;
  EllipticSchedule elliptic;
  ShootParams shoot;
  double balance_tolerance = 1e-8;
  int output_every = 1;      // keep every n-th time step in (t, r, u) CSVs
  std::filesystem::path out_dir;

  /// ClockSpec for this scenario; ε defaults to min(0.1, (b − ‖u0‖∞)/4).
  ClockSpec clock_spec() const;
};

ModelManifold parse_manifold(const json& j, const std::string& path = "manifold");
Nonlinearity parse_nonlinearity(const json& j, const std::string& path = "nonlinearity");

/// Reads the fields `e` needs; unknown top-level keys are rejected so typos
/// surface. Throws ConfigError.
Scenario parse_scenario(const json& j, Experiment e);
/// Parses text first; syntax errors become ConfigError("<document>").
Scenario parse_scenario_text(const std::string& text, Experiment e);

}  // namespace stochlab::cli
