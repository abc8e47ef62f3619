#include "coisac/panda.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coisac {

void PenaltyConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + ": must be positive");
  };
  positive(rho, "rho");
  positive(varrho, "varrho");
  positive(lambda, "lambda");
  positive(primal_tolerance, "primal_tolerance");
  positive(al_change_tolerance, "al_change_tolerance");
  if (max_outer_iters < 1) throw std::invalid_argument("max_outer_iters: must be >= 1");
  if (min_outer_iters < 1) throw std::invalid_argument("min_outer_iters: must be >= 1");
  if (stall_window < 1) throw std::invalid_argument("stall_window: must be >= 1");
}

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::Residual: return "residual";
    case TerminationReason::AlStall: return "al_stall";
    case TerminationReason::IterationCap: return "iteration_cap";
  }
  return "unknown";
}

CMat prox_surrogate_target(const CMat& previous, const CMat& gradient, const CMat& anchor,
                           double alpha, double rho) {
  const double beta = alpha + rho;
  if (!(beta > 0.0)) throw std::invalid_argument("prox_surrogate_target: alpha + rho must be positive");
  return (-gradient + alpha * previous + rho * anchor) / beta;
}

CMat proximal_direction(const SplitObjective& objective, int agent, const CMat& exchange_sum,
                        const CMat& previous, const CMat& anchor, double rho) {
  const CMat grad = objective.coupled_gradient(agent, exchange_sum);
  const double beta = objective.lipschitz_alpha + rho;
  CMat direction = beta * prox_surrogate_target(previous, grad, anchor, objective.lipschitz_alpha, rho);
  if (objective.separable_linear_terms) direction -= objective.separable_linear_terms(agent).adjoint();
  return direction;
}

double dual_ascent(CMat& dual, const CMat& primal, const CMat& consensus) {
  const CMat residual = primal - consensus;
  dual += residual;
  return residual.norm();
}

double lipschitz_from_gram(const CMat& gram_sum, const CVec& j1) {
  const CMat m = j1.asDiagonal() * gram_sum * j1.conjugate().asDiagonal();
  return std::max(2.0 * hermitian_lambda_max(m), 1e-8);
}

double estimate_lipschitz(std::span<const CMat> channels, const CVec& j1) {
  if (channels.empty()) return 1e-8;
  CMat gram = CMat::Zero(channels.front().cols(), channels.front().cols());
  for (const auto& h : channels) gram.noalias() += h.adjoint() * h;
  return lipschitz_from_gram(gram, j1);
}

double augmented_lagrangian(double objective, std::span<const double> agent_penalties) {
  double total = objective;
  for (double p : agent_penalties) total += p;
  return total;
}

double penalty_term(const CMat& primal, const CMat& consensus, const CMat& dual, double weight) {
  return 0.5 * weight * (primal - consensus + dual).squaredNorm();
}

namespace {

double relative_change(double current, double previous) {
  return std::abs(current - previous) / std::max(std::abs(current), 1e-12);
}

bool residual_met(const IterationReport& r, double tolerance, double power_budget) {
  const double scale = std::sqrt(power_budget);
  for (double res : r.consensus_residuals)
    if (res / scale >= tolerance) return false;
  return true;
}

}  // namespace

std::optional<TerminationReason> convergence_check(std::span<const IterationReport> history,
                                                   const PenaltyConfig& penalties,
                                                   double power_budget) {
  const int n = static_cast<int>(history.size());
  if (n == 0) return std::nullopt;
  if (n >= penalties.max_outer_iters) return TerminationReason::IterationCap;
  if (n < std::max(2, penalties.min_outer_iters)) return std::nullopt;

  const auto& last = history[n - 1];
  const double change = relative_change(last.augmented_lagrangian, history[n - 2].augmented_lagrangian);
  if (change < penalties.al_change_tolerance &&
      residual_met(last, penalties.primal_tolerance, power_budget))
    return TerminationReason::Residual;

  if (n > penalties.stall_window) {
    for (int k = n - penalties.stall_window; k < n; ++k) {
      if (relative_change(history[k].augmented_lagrangian, history[k - 1].augmented_lagrangian) >=
          penalties.al_change_tolerance)
        return std::nullopt;
    }
    return TerminationReason::AlStall;
  }
  return std::nullopt;
}

}  // namespace coisac
