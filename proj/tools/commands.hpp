// The four experiment commands. Each returns a process exit code.
#pragma once

#include <filesystem>
#include <iosfwd>

#include "config.hpp"

namespace coisac::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kInfeasible = 3, kIterationCap = 4 };

struct RunContext {
  ExperimentConfig config;
  std::filesystem::path out_dir = ".";
  int threads = 1;
  std::ostream* log = nullptr;  // progress and diagnostics; may be null
};

/// Single solve; writes diagnostics.csv, summary.csv and beampattern_ap<a>.csv.
int cmd_design(const RunContext& ctx);

/// Rate versus the configured sweep variable; writes sweep.csv.
int cmd_sweep(const RunContext& ctx);

/// Analytic and Monte-Carlo detection probability over the Pr_FA list; writes roc.csv.
int cmd_roc(const RunContext& ctx);

/// Detailed Monte-Carlo detection report; writes detect_mc.csv and radar_sinr.csv.
int cmd_detect_mc(const RunContext& ctx);

/// Seeds used for trial `trial` of a run seeded with `seed`.
std::uint64_t trial_channel_seed(std::uint64_t seed, int trial);
std::uint64_t trial_solver_seed(std::uint64_t seed, int trial);

}  // namespace coisac::cli
