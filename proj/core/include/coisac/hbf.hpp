// Closed-form block updates for the hybrid beamforming design: fractional
// programming auxiliaries, the sphere-constrained T step, the beampattern
// QCQP for U, notch-ball projection for Z, BSUM for the analog precoder,
// least squares for the digital precoder, and the V / zeta fits.
#pragma once

#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include "coisac/linalg.hpp"
#include "coisac/metrics.hpp"
#include "coisac/panda.hpp"
#include "coisac/scene.hpp"

namespace coisac {

/// Thrown when the beampattern budget cannot be met for the current V and zeta.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double min_mse, int agent = -1, int iteration = -1)
      : std::runtime_error(what), min_mse_(min_mse), agent_(agent), iteration_(iteration) {}
  double min_mse() const { return min_mse_; }
  int agent() const { return agent_; }
  int iteration() const { return iteration_; }

 private:
  double min_mse_;
  int agent_;
  int iteration_;
};

/// Fractional-programming auxiliaries. r_u is the user SINR at the point they
/// were computed from; eta_u the associated quadratic-transform variable.
struct AuxScalars {
  RVec r;
  CVec eta;
  RVec weights;
};

/// r, eta maximizing the surrogate for the summed exchange matrix Xi = sum_a H_a^H T_a.
AuxScalars update_r_eta(const CMat& exchange_sum, const RVec& weights, const RVec& noises);

/// diag(conj(eta)).
CVec j1_diagonal(const AuxScalars& aux);

/// diag(sqrt(w (1 + r)) conj(eta)).
CVec j2_diagonal(const AuxScalars& aux);

/// Per-agent linear coefficient -2 J2 H_a^H (U x n_tx); the term is Re tr(B T_a).
CMat linear_coefficient(const CMat& channel, const AuxScalars& aux);

/// Gradient of ||J1 Xi||^2 with respect to T_a: 2 H_a J1^H J1 Xi.
CMat coupled_gradient(const CMat& channel, const AuxScalars& aux, const CMat& exchange_sum);

/// sum_u [w ln(1+r) - w r - |eta|^2 sigma^2].
double surrogate_constant(const AuxScalars& aux, const RVec& noises);

/// ||J1 Xi||^2 + sum_a Re tr(B_a T_a) - sum_u c_u. Equals -sum w ln(1+SINR)
/// when aux was computed from the same Xi.
double surrogate_objective(std::span<const CMat> channels, std::span<const CMat> precoders,
                           const AuxScalars& aux, const RVec& noises);

/// Same, from the summed exchange matrix and the per-agent linear terms Re tr(B_a T_a).
double surrogate_objective(const CMat& exchange_sum, double linear_terms, const AuxScalars& aux,
                           const RVec& noises);

/// Weighted least-squares data of the beampattern fit:
/// MSE(U) = (1/L) ||G1 U - G2||^2 with G1 = diag(sqrt(mu)) A^H, G2 = zeta diag(sqrt(mu)) V^H.
struct BeampatternQcqp {
  CMat g1;           // L x n_tx
  RVec sqrt_weights;
  CMat eigvecs;      // of G1^H G1
  RVec eigvals;
  int grid_size = 0;

  static BeampatternQcqp build(const CMat& grid_steering, const RVec& weights);
};

/// Per-AP primal and dual variables plus cached steering matrices.
struct ApSolverState {
  CMat T;       // n_tx x U, ||T||^2 = E
  CMat U;       // n_tx x U, beampattern-feasible copy
  CMat Z;       // U x notch_count, notch-feasible copy of (F_A F_D)^H A_N
  CMat V;       // U x L
  double zeta = 0.0;
  HbfState hbf;
  CMat omega;   // dual of T = F_A F_D
  CMat lambda;  // dual of U = F_A F_D
  CMat phi;     // dual of Z = (F_A F_D)^H A_N
  CMat notch_steering;  // A_N, n_tx x notch_count
  CMat grid_steering;   // A, n_tx x L
};

/// (1/L) sum_l mu_l ||a_l^H U - zeta v_l^H||^2.
double surrogate_mse(const CMat& u, const CMat& v, double zeta, const BeampatternSpec& spec);
double surrogate_mse(const CMat& u, const CMat& v, double zeta, const CMat& grid_steering,
                     const BeampatternSpec& spec);

struct TUpdate {
  CMat T;
  bool degenerate = false;
};

/// T = sqrt(E) Ttilde / ||Ttilde||, Ttilde = -B^H - grad + alpha T_prev + rho (F_A F_D - Omega).
TUpdate update_T(const ApSolverState& state, const CMat& gradient, const CMat& linear_coef,
                 double alpha, double rho, double power_budget);

struct UUpdate {
  CMat U;
  double multiplier = 0.0;  // KKT multiplier epsilon
  double mse = 0.0;         // surrogate MSE at U
};

/// Projection of `target` onto {U : (1/L)||G1 U - G2||^2 <= gamma}. Throws
/// InfeasibleError when even the unconstrained least-squares fit violates gamma.
UUpdate project_beampattern(const CMat& target, const CMat& g2, const BeampatternQcqp& qcqp,
                            double gamma);

/// Minimum of (1/L)||G1 U - G2||^2 over U.
double min_surrogate_mse(const CMat& g2, const BeampatternQcqp& qcqp);

/// zeta diag(sqrt(mu)) V^H.
CMat beampattern_target(const CMat& v, double zeta, const BeampatternQcqp& qcqp);

/// U = projection of F_A F_D - Lambda onto the beampattern set.
UUpdate update_U(const ApSolverState& state, const BeampatternSpec& spec, const BeampatternQcqp& qcqp);

/// Column-wise ball projection of (F_A F_D)^H A_N - Phi with radius sqrt(Gamma).
CMat update_Z(const ApSolverState& state, double notch_budget);

/// Column-wise projection of d onto {||z|| <= sqrt(budget)}.
CMat project_columns_to_ball(const CMat& d, double budget);

/// Stacked least-squares data ||W1 F_A F_D - W2||^2 that both precoder updates minimize.
struct PrecoderLeastSquares {
  CMat w1;  // (2 n_tx + notch_count) x n_tx
  CMat w2;  // (2 n_tx + notch_count) x U

  double objective(const CMat& analog, const CMat& digital) const;
  /// W1^H W1 F_A F_D F_D^H - W1^H W2 F_D^H.
  CMat analog_gradient(const CMat& analog, const CMat& digital) const;
};

PrecoderLeastSquares precoder_least_squares(const ApSolverState& state, const PenaltyConfig& pen);

struct AnalogUpdate {
  CMat analog;
  int iterations = 0;
  double objective = 0.0;
  bool monotone = true;
};

/// Entrywise -exp(j angle(W)): the unit-modulus minimizer of 2 Re<W, F>.
CMat bsum_phase_step(const CMat& wbar);

/// BSUM iterations F_A = -exp(j angle(grad f - alpha_tilde F_A)).
AnalogUpdate update_FA(const ApSolverState& state, const PenaltyConfig& pen, int max_iters = 50,
                       double tolerance = 1e-6);

struct DigitalUpdate {
  CMat digital;
  bool regularized = false;
};

/// F_D = (F_A^H M1 F_A)^{-1} F_A^H M2.
DigitalUpdate update_FD(const ApSolverState& state, const PenaltyConfig& pen);

struct VUpdate {
  CMat V;
  bool degenerate = false;
};

/// v_l = sqrt(p_l) (a_l^H U)^H / ||a_l^H U||.
VUpdate update_V(const CMat& u, const CMat& grid_steering, const BeampatternSpec& spec);

/// Least-squares zeta >= 0 for fixed U and V.
double update_zeta(const CMat& u, const CMat& v, const CMat& grid_steering, const BeampatternSpec& spec);

/// Dual ascent on all three blocks. Returns the Frobenius norm of the combined dual change.
double dual_update(ApSolverState& state);

/// Largest of ||T - X||, ||U - X||, ||Z - X^H A_N|| with X = F_A F_D.
double consensus_residual(const ApSolverState& state);

/// Penalty part of the augmented Lagrangian for one agent.
double agent_penalty(const ApSolverState& state, const PenaltyConfig& pen);

/// Per-agent setup for the solver state.
struct InitOptions {
  double power_budget = 100.0;
  int n_rf = 4;
};

/// Random-phase analog precoder, channel-matched digital precoder scaled to
/// the budget, and feasible U, Z, V, zeta. Throws InfeasibleError when the
/// beampattern budget is below the least-squares floor for the fitted V, zeta.
ApSolverState initialize_state(const CMat& channel, const BeampatternSpec& spec,
                               const BeampatternQcqp& qcqp, const InitOptions& options,
                               std::mt19937_64& rng);

}  // namespace coisac
