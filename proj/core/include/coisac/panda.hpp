// Problem-agnostic pieces of the distributed proximal-gradient ADMM:
// penalty configuration, the proximal step on the coupled smooth term,
// dual ascent, Lipschitz estimation and convergence accounting.
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coisac/linalg.hpp"

namespace coisac {

struct PenaltyConfig {
  double rho = 1.0;     // T = F_A F_D consensus block
  double varrho = 1.0;  // U = F_A F_D block
  double lambda = 1.0;  // Z = (F_A F_D)^H A_N block
  int max_outer_iters = 500;
  int min_outer_iters = 2;
  double primal_tolerance = 1e-3;      // on ||T - F_A F_D|| / sqrt(E)
  double al_change_tolerance = 1e-5;   // relative
  int stall_window = 25;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

enum class TerminationReason { Residual, AlStall, IterationCap };

std::string to_string(TerminationReason reason);

struct IterationReport {
  int iteration = 0;
  double augmented_lagrangian = 0.0;   // after dual ascent
  double al_after_primal = 0.0;        // after the primal sweep, before dual ascent
  double al_before = 0.0;              // value the primal sweep started from
  double surrogate_objective = 0.0;
  double wsr = 0.0;                    // bits per channel use
  std::vector<double> primal_residuals;   // ||T_a - F_A F_D||_F per agent
  std::vector<double> consensus_residuals; // max over the three blocks, per agent
  std::vector<double> dual_changes;       // ||dual_new - dual_old||_F per agent
  std::vector<double> surrogate_mse;      // quadratic beampattern MSE of U_a
  std::vector<double> beampattern_mse;    // quartic MSE of F_A F_D at the best scale
  std::vector<double> notch_max;          // max notch power of F_A F_D
  long exchanged_scalars = 0;             // complex values broadcast this iteration
  double wall_ms = 0.0;
};

/// A smooth objective sum_a <L_a, T_a> + G0(T_1..T_A) whose coupled part is
/// only visible to agent a through its gradient block.
struct SplitObjective {
  std::function<CMat(int agent, const CMat& exchange_sum)> coupled_gradient;
  std::function<CMat(int agent)> separable_linear_terms;  // L_a, so the term is Re tr(L_a T_a)
  double lipschitz_alpha = 1.0;
};

/// (1/beta)(-grad + alpha T_prev + rho anchor), beta = alpha + rho; anchor is F_A F_D - Omega.
CMat prox_surrogate_target(const CMat& previous, const CMat& gradient, const CMat& anchor,
                           double alpha, double rho);

/// Unnormalized minimizer direction of the linearized agent subproblem,
/// -L_a^H + beta * prox_surrogate_target(...).
CMat proximal_direction(const SplitObjective& objective, int agent, const CMat& exchange_sum,
                        const CMat& previous, const CMat& anchor, double rho);

/// dual += primal - consensus. Returns ||primal - consensus||_F.
double dual_ascent(CMat& dual, const CMat& primal, const CMat& consensus);

/// 2 * lambda_max(J sum_a H_a^H H_a J^H) with J = diag(j1), floored at 1e-8.
/// This bounds the Lipschitz constant of the stacked gradient over all agents.
double estimate_lipschitz(std::span<const CMat> channels, const CVec& j1);

/// Same bound from a precomputed Gram sum sum_a H_a^H H_a.
double lipschitz_from_gram(const CMat& gram_sum, const CVec& j1);

/// Objective plus the per-agent penalty contributions, reduced in agent order.
double augmented_lagrangian(double objective, std::span<const double> agent_penalties);

/// (rho/2) ||primal - consensus + dual||^2.
double penalty_term(const CMat& primal, const CMat& consensus, const CMat& dual, double weight);

/// Decides termination from the report history. Residual convergence needs
/// max_a residual / sqrt(E) below tolerance and a small relative AL change;
/// AL stall is a run of stall_window small AL changes with the residual unmet.
std::optional<TerminationReason> convergence_check(std::span<const IterationReport> history,
                                                   const PenaltyConfig& penalties,
                                                   double power_budget);

}  // namespace coisac
