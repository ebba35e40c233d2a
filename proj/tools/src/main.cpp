#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "stochlab/cli/run.hpp"
#include "stochlab/cli/scenario.hpp"

namespace fs = std::filesystem;
using namespace stochlab::cli;

namespace {

// STOCHLAB_LOG=trace|debug|info|warn|error|off; warn by default.
void setup_logging() {
  auto logger = spdlog::stderr_color_mt("stochlab");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("STOCHLAB_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("STOCHLAB_LOG='{}' is not a log level; keeping 'warn'", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

int execute(Experiment e, const fs::path& config, const fs::path& out) {
  std::ifstream in(config);
  if (!in) {
    std::cerr << "error: cannot read config " << config.string() << "\n";
    return kExitError;
  }
  std::stringstream text;
  text << in.rdbuf();
  if (!fs::is_directory(out)) {
    std::cerr << "error: output directory does not exist: " << out.string() << "\n";
    return kExitError;
  }
  try {
    const Scenario s = parse_scenario_text(text.str(), e);
    const RunResult r = run(s, out);
    std::cout << r.message << "\n";
    for (const auto& f : r.files) spdlog::info("wrote {}", f.string());
    return r.exit_code;
  } catch (const ConfigError& ex) {
    std::cerr << "config error in " << config.string() << ": " << ex.what() << "\n";
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
  }
  return kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"stochlab: stochastic completeness and nonlinear diffusion on model manifolds"};
  app.require_subcommand(1);

  struct Command {
    Experiment experiment;
    std::string config;
    std::string out;
    CLI::App* sub = nullptr;
  };
  std::vector<Command> commands;
  const std::pair<Experiment, const char*> table[] = {
      {Experiment::Classify, "decide stochastic completeness from the warp"},
      {Experiment::Solve, "solve the Dirichlet problem on one ball"},
      {Experiment::DemoNonuniqueness, "minimal vs witness solutions, duality and elliptic closure"},
      {Experiment::DemoElliptic, "elliptic exhaustion with a shooting cross-check"},
      {Experiment::MassAudit, "mass balance audit on one ball"},
      {Experiment::Shoot, "radial shooting for the linear equation"},
      {Experiment::Clock, "tabulate the clock amplitude and witness boundary data"},
  };
  commands.reserve(std::size(table));
  for (const auto& [e, help] : table) {
    commands.push_back({e, {}, {}, nullptr});
    auto& c = commands.back();
    c.sub = app.add_subcommand(command_name(e), help);
    c.sub->add_option("--config", c.config, "scenario JSON")->required();
    c.sub->add_option("--out", c.out, "existing output directory")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  for (const auto& c : commands) {
    if (c.sub->parsed()) return execute(c.experiment, c.config, c.out);
  }
  return kExitError;
}
