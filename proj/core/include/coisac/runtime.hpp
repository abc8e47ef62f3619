// Iteration drivers: the distributed proximal-gradient ADMM with one agent
// per AP and barrier-synchronized exchange rounds, and the centralized ADMM
// reference whose T block is solved exactly.
#pragma once

#include <cstdint>
#include <vector>

#include "coisac/agent.hpp"
#include "coisac/hbf.hpp"
#include "coisac/panda.hpp"
#include "coisac/scene.hpp"

namespace coisac {

/// A fully specified design instance.
struct Problem {
  NetworkScene scene;
  ChannelSet channels;
  std::vector<BeampatternSpec> specs;
  RVec weights;  // per-user rate weights
  RVec noises;   // per-user noise power

  /// Draws channels from `channel_seed` and builds one spec per AP. The MSE
  /// and notch budgets in `params` are per unit transmit power and are
  /// multiplied by the scene's power budget.
  static Problem build(const NetworkScene& scene, std::uint64_t channel_seed,
                       const BeampatternParams& params);
  void validate() const;
  int num_aps() const { return static_cast<int>(specs.size()); }
  int num_users() const { return static_cast<int>(weights.size()); }
};

enum class TBlockSolver { Exact, Proximal };

struct SolverOptions {
  PenaltyConfig penalties;
  int threads = 1;
  std::uint64_t seed = 1;  // initialization stream
  int bsum_max_iters = 50;
  double bsum_tolerance = 1e-6;
  /// Centralized reference only.
  TBlockSolver central_t_block = TBlockSolver::Exact;
  int central_max_sweeps = 20;
  double central_sweep_tolerance = 1e-6;
  /// Scale each returned digital precoder down so the notch and power limits hold exactly.
  bool restore_feasibility = true;
};

struct SolveResult {
  std::vector<HbfState> states;
  std::vector<ApSolverState> solver_states;
  std::vector<IterationReport> reports;
  TerminationReason reason = TerminationReason::IterationCap;
  int iterations = 0;
  double total_ms = 0.0;
  double final_wsr = 0.0;  // of the returned (scaled) states
  std::vector<double> output_scale;  // factor applied to each returned digital precoder
  /// Complex values shared once before iterating (per-AP Gram matrices).
  long setup_exchanged_scalars = 0;
};

SolveResult run_panda_distributed(const Problem& problem, const SolverOptions& options);

SolveResult run_centralized_admm(const Problem& problem, const SolverOptions& options);

}  // namespace coisac
