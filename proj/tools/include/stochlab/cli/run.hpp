#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stochlab/cli/scenario.hpp"

namespace stochlab::cli {

/// 0: decided, 1: error (bad config, solver failure, failed audit or an
/// incoherent verdict), 2: undetermined.
inline constexpr int kExitDecided = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUndetermined = 2;

struct RunResult {
  int exit_code = kExitDecided;
  std::string message;
  std::vector<std::filesystem::path> files;  // in the order written
};

/// Runs one experiment and writes its artifacts under `out_dir`, which must
/// already exist. Solver and I/O failures propagate as exceptions; main maps
/// them to exit 1.
RunResult run(const Scenario& scenario, const std::filesystem::path& out_dir);

}  // namespace stochlab::cli
