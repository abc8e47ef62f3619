#include "coisac/agent.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace coisac {

SphereQpSolution solve_sphere_qp(const CMat& q, const CMat& b, double power_budget) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(q);
  const RVec sigma = eig.eigenvalues();
  const CMat& p = eig.eigenvectors();
  const CMat bt = p.adjoint() * b;
  const Eigen::Index n = sigma.size();
  const double smin = sigma(0);
  const double bnorm = b.norm();
  SphereQpSolution out;

  if (bnorm == 0.0) {
    out.T = CMat::Zero(q.rows(), b.cols());
    out.T.col(0) = p.col(0) * std::sqrt(power_budget);
    out.multiplier = -smin;
    out.hard_case = true;
    return out;
  }

  RVec row_norm2(n);
  for (Eigen::Index i = 0; i < n; ++i) row_norm2(i) = bt.row(i).squaredNorm();
  const double tie = 1e-12 * std::max(std::abs(sigma(n - 1)), 1.0);
  auto norm2_at = [&](double nu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += row_norm2(i) / ((sigma(i) + nu) * (sigma(i) + nu));
    return s;
  };

  // Hard case: no component of B along the bottom eigenspace and the rest
  // cannot reach the sphere even at the smallest admissible multiplier.
  double bottom = 0.0;
  double rest_at_min = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sigma(i) - smin <= tie)
      bottom += row_norm2(i);
    else
      rest_at_min += row_norm2(i) / ((sigma(i) - smin) * (sigma(i) - smin));
  }
  if (bottom <= 1e-28 * bnorm * bnorm && rest_at_min <= power_budget) {
    CMat tt = CMat::Zero(n, b.cols());
    for (Eigen::Index i = 0; i < n; ++i)
      if (sigma(i) - smin > tie) tt.row(i) = bt.row(i) / (sigma(i) - smin);
    tt(0, 0) += std::sqrt(power_budget - rest_at_min);
    out.T = p * tt;
    out.multiplier = -smin;
    out.hard_case = true;
  } else {
    double lo = -smin;
    double hi = -smin + bnorm / std::sqrt(power_budget);
    for (int it = 0; it < 300 && hi - lo > 1e-15 * std::max(std::abs(hi), 1.0); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (norm2_at(mid) > power_budget)
        lo = mid;
      else
        hi = mid;
    }
    CMat tt(n, b.cols());
    for (Eigen::Index i = 0; i < n; ++i) tt.row(i) = bt.row(i) / (sigma(i) + hi);
    out.T = p * tt;
    out.multiplier = hi;
  }
  out.T *= std::sqrt(power_budget) / out.T.norm();
  return out;
}

ApAgent::ApAgent(int index, CMat channel, BeampatternSpec spec, AgentOptions options,
                 std::uint64_t seed)
    : index_(index), channel_(std::move(channel)), spec_(std::move(spec)), options_(std::move(options)) {
  qcqp_ = BeampatternQcqp::build(steering_matrix(spec_.grid_angles, static_cast<int>(channel_.rows())),
                                 spec_.weights);
  std::mt19937_64 rng(seed);
  InitOptions init;
  init.power_budget = options_.power_budget;
  init.n_rf = options_.n_rf;
  state_ = initialize_state(channel_, spec_, qcqp_, init, rng);
  aux_ = update_r_eta(message(), options_.weights, options_.noises);
  linear_coef_ = linear_coefficient(channel_, aux_);
}

CMat ApAgent::message() const { return channel_.adjoint() * state_.T; }

void ApAgent::refresh_auxiliaries(const CMat& exchange_sum, const CMat& gram_sum) {
  aux_ = update_r_eta(exchange_sum, options_.weights, options_.noises);
  linear_coef_ = linear_coefficient(channel_, aux_);
  alpha_ = lipschitz_from_gram(gram_sum, j1_diagonal(aux_));
  const VUpdate v = update_V(state_.U, state_.grid_steering, spec_);
  state_.V = v.V;
  state_.zeta = update_zeta(state_.U, state_.V, state_.grid_steering, spec_);
  degenerate_ = v.degenerate;
}

void ApAgent::proximal_T(const CMat& exchange_sum) {
  const CMat grad = coupled_gradient(channel_, aux_, exchange_sum);
  const TUpdate t = update_T(state_, grad, linear_coef_, alpha_, options_.penalties.rho,
                             options_.power_budget);
  state_.T = t.T;
  degenerate_ = degenerate_ || t.degenerate;
}

void ApAgent::exact_T(const CMat& others_exchange) {
  const RVec eta2 = aux_.eta.cwiseAbs2();
  const CMat weighted = channel_ * eta2.asDiagonal();
  const CMat q = weighted * channel_.adjoint();
  const double rho = options_.penalties.rho;
  const CMat b = -weighted * others_exchange - 0.5 * linear_coef_.adjoint() +
                 0.5 * rho * (state_.hbf.precoder() - state_.omega);
  state_.T = solve_sphere_qp(q, b, options_.power_budget).T;
}

double ApAgent::local_t_objective() const {
  return linear_term() +
         penalty_term(state_.T, state_.hbf.precoder(), state_.omega, options_.penalties.rho);
}

double ApAgent::linear_term() const { return (linear_coef_ * state_.T).trace().real(); }

double ApAgent::penalty() const { return agent_penalty(state_, options_.penalties); }

AgentStepOutput ApAgent::finish_iteration() {
  const PenaltyConfig& pen = options_.penalties;
  state_.U = update_U(state_, spec_, qcqp_).U;
  state_.Z = update_Z(state_, spec_.notch_budget);
  const AnalogUpdate fa = update_FA(state_, pen, options_.bsum_max_iters, options_.bsum_tolerance);
  state_.hbf.analog = fa.analog;
  const DigitalUpdate fd = update_FD(state_, pen);
  state_.hbf.digital = fd.digital;

  AgentStepOutput out;
  out.bsum_iterations = fa.iterations;
  out.bsum_monotone = fa.monotone;
  out.degenerate = degenerate_ || fd.regularized;
  out.message = message();
  out.linear_term = linear_term();
  out.penalty_before_dual = penalty();
  out.primal_residual = (state_.T - state_.hbf.precoder()).norm();
  out.consensus_residual = consensus_residual(state_);
  out.dual_change = dual_update(state_);
  out.penalty_after_dual = penalty();
  return out;
}

}  // namespace coisac
