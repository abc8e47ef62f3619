// One access point's share of the iterative design. The agent owns its
// solver state exclusively; the only cross-AP inputs are the summed
// exchange matrix and the Gram sum shared once at setup.
#pragma once

#include <cstdint>

#include "coisac/hbf.hpp"
#include "coisac/panda.hpp"
#include "coisac/scene.hpp"

namespace coisac {

struct AgentOptions {
  PenaltyConfig penalties;
  double power_budget = 100.0;
  int n_rf = 4;
  int bsum_max_iters = 50;
  double bsum_tolerance = 1e-6;
  RVec weights;
  RVec noises;
};

/// Local results of one iteration, reduced by the orchestrator in AP order.
struct AgentStepOutput {
  CMat message;                 // H_a^H T_a after the update
  double linear_term = 0.0;     // Re tr(B_a T_a)
  double penalty_before_dual = 0.0;
  double penalty_after_dual = 0.0;
  double primal_residual = 0.0;     // ||T - F_A F_D||
  double consensus_residual = 0.0;
  double dual_change = 0.0;
  int bsum_iterations = 0;
  bool bsum_monotone = true;
  bool degenerate = false;
};

/// Result of the exact sphere-constrained quadratic T subproblem.
struct SphereQpSolution {
  CMat T;
  double multiplier = 0.0;
  bool hard_case = false;
};

/// Minimizes tr(T^H Q T) - 2 Re tr(B^H T) subject to ||T||_F^2 = E for
/// Hermitian PSD Q.
SphereQpSolution solve_sphere_qp(const CMat& q, const CMat& b, double power_budget);

class ApAgent {
 public:
  ApAgent(int index, CMat channel, BeampatternSpec spec, AgentOptions options, std::uint64_t seed);

  int index() const { return index_; }
  const CMat& channel() const { return channel_; }
  const BeampatternSpec& spec() const { return spec_; }
  const ApSolverState& state() const { return state_; }
  const AuxScalars& aux() const { return aux_; }
  double alpha() const { return alpha_; }

  /// Exchange payload H_a^H T_a (U x U).
  CMat message() const;

  /// r, eta from the summed exchange matrix, the Lipschitz bound, then V and zeta from U.
  void refresh_auxiliaries(const CMat& exchange_sum, const CMat& gram_sum);

  /// Linearized (proximal-gradient) T step.
  void proximal_T(const CMat& exchange_sum);

  /// Exact T step holding the other agents' exchange contributions fixed.
  void exact_T(const CMat& others_exchange);

  /// Part of the T-block objective owned by this agent given the full exchange sum:
  /// Re tr(B T) + (rho/2)||T - F_A F_D + Omega||^2.
  double local_t_objective() const;

  /// U, Z, F_A, F_D blocks followed by dual ascent.
  AgentStepOutput finish_iteration();

  /// Current Re tr(B_a T_a) and penalty value (used to evaluate the starting AL).
  double linear_term() const;
  double penalty() const;

 private:
  int index_;
  CMat channel_;
  BeampatternSpec spec_;
  AgentOptions options_;
  BeampatternQcqp qcqp_;
  ApSolverState state_;
  AuxScalars aux_;
  CMat linear_coef_;
  double alpha_ = 1.0;
  bool degenerate_ = false;
};

}  // namespace coisac
