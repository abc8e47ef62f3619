#include "coisac/hbf.hpp"

#include <algorithm>
#include <cmath>

namespace coisac {

AuxScalars update_r_eta(const CMat& exchange_sum, const RVec& weights, const RVec& noises) {
  const Eigen::Index n = exchange_sum.rows();
  AuxScalars aux;
  aux.r.resize(n);
  aux.eta.resize(n);
  aux.weights = weights;
  for (Eigen::Index u = 0; u < n; ++u) {
    const double total = exchange_sum.row(u).squaredNorm() + noises(u);
    const double signal = std::norm(exchange_sum(u, u));
    aux.r(u) = signal / (total - signal);
    aux.eta(u) = std::sqrt(weights(u) * (1.0 + aux.r(u))) * exchange_sum(u, u) / total;
  }
  return aux;
}

CVec j1_diagonal(const AuxScalars& aux) { return aux.eta.conjugate(); }

CVec j2_diagonal(const AuxScalars& aux) {
  CVec j2(aux.eta.size());
  for (Eigen::Index u = 0; u < j2.size(); ++u)
    j2(u) = std::sqrt(aux.weights(u) * (1.0 + aux.r(u))) * std::conj(aux.eta(u));
  return j2;
}

CMat linear_coefficient(const CMat& channel, const AuxScalars& aux) {
  return -2.0 * (j2_diagonal(aux).asDiagonal() * channel.adjoint());
}

CMat coupled_gradient(const CMat& channel, const AuxScalars& aux, const CMat& exchange_sum) {
  const RVec eta2 = aux.eta.cwiseAbs2();
  return 2.0 * (channel * (eta2.asDiagonal() * exchange_sum));
}

double surrogate_constant(const AuxScalars& aux, const RVec& noises) {
  double total = 0.0;
  for (Eigen::Index u = 0; u < aux.r.size(); ++u) {
    total += aux.weights(u) * std::log1p(aux.r(u)) - aux.weights(u) * aux.r(u) -
             std::norm(aux.eta(u)) * noises(u);
  }
  return total;
}

double surrogate_objective(const CMat& exchange_sum, double linear_terms, const AuxScalars& aux,
                           const RVec& noises) {
  const double quadratic = (j1_diagonal(aux).asDiagonal() * exchange_sum).squaredNorm();
  return quadratic + linear_terms - surrogate_constant(aux, noises);
}

double surrogate_objective(std::span<const CMat> channels, std::span<const CMat> precoders,
                           const AuxScalars& aux, const RVec& noises) {
  const CMat xi = effective_downlink(channels, precoders);
  double linear = 0.0;
  for (std::size_t a = 0; a < channels.size(); ++a)
    linear += (linear_coefficient(channels[a], aux) * precoders[a]).trace().real();
  return surrogate_objective(xi, linear, aux, noises);
}

BeampatternQcqp BeampatternQcqp::build(const CMat& grid_steering, const RVec& weights) {
  BeampatternQcqp q;
  q.grid_size = static_cast<int>(grid_steering.cols());
  q.sqrt_weights = weights.cwiseSqrt();
  q.g1 = q.sqrt_weights.asDiagonal() * grid_steering.adjoint();
  Eigen::SelfAdjointEigenSolver<CMat> eig(q.g1.adjoint() * q.g1);
  q.eigvecs = eig.eigenvectors();
  q.eigvals = eig.eigenvalues().cwiseMax(0.0);
  return q;
}

double surrogate_mse(const CMat& u, const CMat& v, double zeta, const BeampatternSpec& spec) {
  return surrogate_mse(u, v, zeta, steering_matrix(spec.grid_angles, static_cast<int>(u.rows())), spec);
}

double surrogate_mse(const CMat& u, const CMat& v, double zeta, const CMat& a,
                     const BeampatternSpec& spec) {
  const CMat fit = a.adjoint() * u - zeta * v.adjoint();
  double total = 0.0;
  for (Eigen::Index l = 0; l < fit.rows(); ++l) total += spec.weights(l) * fit.row(l).squaredNorm();
  return total / static_cast<double>(spec.grid_size());
}

TUpdate update_T(const ApSolverState& state, const CMat& gradient, const CMat& linear_coef,
                 double alpha, double rho, double power_budget) {
  if (!(alpha + rho > 0.0)) throw std::invalid_argument("update_T: alpha + rho must be positive");
  const CMat tilde = -linear_coef.adjoint() - gradient + alpha * state.T +
                     rho * (state.hbf.precoder() - state.omega);
  TUpdate out;
  const double norm = tilde.norm();
  if (norm == 0.0 || !std::isfinite(norm)) {
    const double prev = state.T.norm();
    out.T = prev > 0.0 ? CMat(state.T * (std::sqrt(power_budget) / prev))
                       : CMat(CMat::Constant(state.T.rows(), state.T.cols(),
                                             std::sqrt(power_budget / static_cast<double>(state.T.size()))));
    out.degenerate = true;
    return out;
  }
  out.T = tilde * (std::sqrt(power_budget) / norm);
  return out;
}

CMat beampattern_target(const CMat& v, double zeta, const BeampatternQcqp& qcqp) {
  return zeta * (qcqp.sqrt_weights.asDiagonal() * v.adjoint());
}

double min_surrogate_mse(const CMat& g2, const BeampatternQcqp& qcqp) {
  const CMat gt = qcqp.eigvecs.adjoint() * (qcqp.g1.adjoint() * g2);
  const double floor = 1e-12 * std::max(qcqp.eigvals.maxCoeff(), 1e-300);
  double explained = 0.0;
  for (Eigen::Index i = 0; i < gt.rows(); ++i)
    if (qcqp.eigvals(i) > floor) explained += gt.row(i).squaredNorm() / qcqp.eigvals(i);
  return std::max(0.0, g2.squaredNorm() - explained) / qcqp.grid_size;
}

UUpdate project_beampattern(const CMat& target, const CMat& g2, const BeampatternQcqp& qcqp,
                            double gamma) {
  const double budget = gamma * qcqp.grid_size;
  const CMat dt = qcqp.eigvecs.adjoint() * target;
  const CMat gt = qcqp.eigvecs.adjoint() * (qcqp.g1.adjoint() * g2);
  const double c = g2.squaredNorm();
  const RVec& lam = qcqp.eigvals;

  auto rotated = [&](double eps) {
    CMat ut(dt.rows(), dt.cols());
    for (Eigen::Index i = 0; i < dt.rows(); ++i) ut.row(i) = (dt.row(i) + eps * gt.row(i)) / (1.0 + eps * lam(i));
    return ut;
  };
  auto residual = [&](const CMat& ut) {
    double val = c;
    for (Eigen::Index i = 0; i < ut.rows(); ++i)
      val += lam(i) * ut.row(i).squaredNorm() - 2.0 * ut.row(i).dot(gt.row(i)).real();
    return std::max(val, 0.0);
  };

  UUpdate out;
  const double at_target = residual(dt);
  if (at_target <= budget) {
    out.U = target;
    out.multiplier = 0.0;
    out.mse = at_target / qcqp.grid_size;
    return out;
  }
  const double min_mse = min_surrogate_mse(g2, qcqp);
  if (min_mse * qcqp.grid_size >= budget)
    throw InfeasibleError("beampattern budget below the least-squares fit", min_mse);

  double lo = 0.0;
  double hi = 1.0;
  while (residual(rotated(hi)) > budget) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e60) throw InfeasibleError("beampattern multiplier bracket diverged", min_mse);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (residual(rotated(mid)) > budget)
      lo = mid;
    else
      hi = mid;
  }
  const CMat ut = rotated(hi);
  out.U = qcqp.eigvecs * ut;
  out.multiplier = hi;
  out.mse = residual(ut) / qcqp.grid_size;
  return out;
}

UUpdate update_U(const ApSolverState& state, const BeampatternSpec& spec, const BeampatternQcqp& qcqp) {
  const CMat target = state.hbf.precoder() - state.lambda;
  return project_beampattern(target, beampattern_target(state.V, state.zeta, qcqp), qcqp,
                             spec.mse_budget);
}

CMat project_columns_to_ball(const CMat& d, double budget) {
  CMat z = d;
  const double radius = std::sqrt(budget);
  for (Eigen::Index t = 0; t < z.cols(); ++t) {
    const double norm = z.col(t).norm();
    if (norm * norm > budget) z.col(t) *= radius / norm;
  }
  return z;
}

CMat update_Z(const ApSolverState& state, double notch_budget) {
  const CMat d = state.hbf.precoder().adjoint() * state.notch_steering - state.phi;
  return project_columns_to_ball(d, notch_budget);
}

double PrecoderLeastSquares::objective(const CMat& analog, const CMat& digital) const {
  return (w1 * (analog * digital) - w2).squaredNorm();
}

CMat PrecoderLeastSquares::analog_gradient(const CMat& analog, const CMat& digital) const {
  const CMat gram = w1.adjoint() * w1;
  return gram * analog * digital * digital.adjoint() - w1.adjoint() * w2 * digital.adjoint();
}

PrecoderLeastSquares precoder_least_squares(const ApSolverState& state, const PenaltyConfig& pen) {
  const Eigen::Index n = state.T.rows();
  const Eigen::Index users = state.T.cols();
  const Eigen::Index notches = state.notch_steering.cols();
  const double sr = std::sqrt(pen.rho / 2.0);
  const double sv = std::sqrt(pen.varrho / 2.0);
  const double sl = std::sqrt(pen.lambda / 2.0);
  PrecoderLeastSquares ls;
  ls.w1.resize(2 * n + notches, n);
  ls.w2.resize(2 * n + notches, users);
  ls.w1.topRows(n) = sr * CMat::Identity(n, n);
  ls.w1.middleRows(n, n) = sv * CMat::Identity(n, n);
  ls.w1.bottomRows(notches) = sl * state.notch_steering.adjoint();
  ls.w2.topRows(n) = sr * (state.T + state.omega);
  ls.w2.middleRows(n, n) = sv * (state.U + state.lambda);
  ls.w2.bottomRows(notches) = sl * (state.Z + state.phi).adjoint();
  return ls;
}

CMat bsum_phase_step(const CMat& wbar) {
  CMat out(wbar.rows(), wbar.cols());
  for (Eigen::Index k = 0; k < wbar.size(); ++k) out(k) = -std::polar(1.0, std::arg(wbar(k)));
  return out;
}

AnalogUpdate update_FA(const ApSolverState& state, const PenaltyConfig& pen, int max_iters,
                       double tolerance) {
  const PrecoderLeastSquares ls = precoder_least_squares(state, pen);
  const CMat& fd = state.hbf.digital;
  // f(F) = Re tr(F^H Gram F R) - 2 Re tr(F^H C) + ||W2||^2 with R = F_D F_D^H, C = W1^H W2 F_D^H.
  const CMat gram = ls.w1.adjoint() * ls.w1;
  const CMat r = fd * fd.adjoint();
  const CMat c = ls.w1.adjoint() * ls.w2 * fd.adjoint();
  const double w2_norm2 = ls.w2.squaredNorm();
  const double alpha = hermitian_lambda_max(gram) * hermitian_lambda_max(r);
  auto evaluate = [&](const CMat& f, CMat& grad) {
    const CMat gf_r = gram * f * r;
    grad = gf_r - c;
    return (f.adjoint() * gf_r).trace().real() - 2.0 * (f.adjoint() * c).trace().real() + w2_norm2;
  };

  AnalogUpdate out;
  out.analog = state.hbf.analog;
  CMat grad;
  out.objective = evaluate(out.analog, grad);
  for (int it = 0; it < max_iters; ++it) {
    const CMat next = bsum_phase_step(grad - alpha * out.analog);
    const double f = evaluate(next, grad);
    if (f > out.objective + 1e-12 * std::max(std::abs(out.objective), 1.0)) out.monotone = false;
    const double change = std::abs(out.objective - f) / std::max(std::abs(out.objective), 1e-300);
    out.analog = next;
    out.objective = f;
    out.iterations = it + 1;
    if (change < tolerance) break;
  }
  return out;
}

DigitalUpdate update_FD(const ApSolverState& state, const PenaltyConfig& pen) {
  const CMat& fa = state.hbf.analog;
  const Eigen::Index n = fa.rows();
  const CMat& an = state.notch_steering;
  const CMat m1 = (pen.rho + pen.varrho) * CMat::Identity(n, n) + pen.lambda * (an * an.adjoint());
  const CMat m2 = pen.rho * (state.T + state.omega) + pen.varrho * (state.U + state.lambda) +
                  pen.lambda * (an * (state.Z + state.phi).adjoint());
  CMat lhs = fa.adjoint() * m1 * fa;
  const CMat rhs = fa.adjoint() * m2;
  DigitalUpdate out;
  Eigen::LLT<CMat> llt(lhs);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
    lhs += 1e-10 * lhs.trace().real() * CMat::Identity(lhs.rows(), lhs.cols());
    llt.compute(lhs);
    out.regularized = true;
  }
  out.digital = llt.solve(rhs);
  return out;
}

VUpdate update_V(const CMat& u, const CMat& grid_steering, const BeampatternSpec& spec) {
  const CMat rows = grid_steering.adjoint() * u;  // L x U, row l = a_l^H U
  VUpdate out;
  out.V = CMat::Zero(u.cols(), rows.rows());
  for (Eigen::Index l = 0; l < rows.rows(); ++l) {
    const double amp = std::sqrt(spec.desired(l));
    if (amp == 0.0) continue;
    const double norm = rows.row(l).norm();
    if (norm == 0.0) {
      out.V(0, l) = amp;
      out.degenerate = true;
    } else {
      out.V.col(l) = (amp / norm) * rows.row(l).adjoint();
    }
  }
  return out;
}

double update_zeta(const CMat& u, const CMat& v, const CMat& grid_steering, const BeampatternSpec& spec) {
  const CMat rows = grid_steering.adjoint() * u;
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index l = 0; l < rows.rows(); ++l) {
    num += spec.weights(l) * (rows.row(l) * v.col(l))(0).real();
    den += spec.weights(l) * v.col(l).squaredNorm();
  }
  if (den <= 0.0) return 0.0;
  return std::max(0.0, num / den);
}

double dual_update(ApSolverState& state) {
  const CMat x = state.hbf.precoder();
  const double a = dual_ascent(state.omega, state.T, x);
  const double b = dual_ascent(state.lambda, state.U, x);
  const double c = dual_ascent(state.phi, state.Z, x.adjoint() * state.notch_steering);
  return std::sqrt(a * a + b * b + c * c);
}

double consensus_residual(const ApSolverState& state) {
  const CMat x = state.hbf.precoder();
  double res = std::max((state.T - x).norm(), (state.U - x).norm());
  if (state.Z.size() > 0) res = std::max(res, (state.Z - x.adjoint() * state.notch_steering).norm());
  return res;
}

double agent_penalty(const ApSolverState& state, const PenaltyConfig& pen) {
  const CMat x = state.hbf.precoder();
  return penalty_term(state.T, x, state.omega, pen.rho) +
         penalty_term(state.U, x, state.lambda, pen.varrho) +
         penalty_term(state.Z, x.adjoint() * state.notch_steering, state.phi, pen.lambda);
}

ApSolverState initialize_state(const CMat& channel, const BeampatternSpec& spec,
                               const BeampatternQcqp& qcqp, const InitOptions& options,
                               std::mt19937_64& rng) {
  const Eigen::Index n = channel.rows();
  const Eigen::Index users = channel.cols();
  ApSolverState s;
  s.grid_steering = steering_matrix(spec.grid_angles, static_cast<int>(n));
  s.notch_steering = steering_matrix(spec.notch_angles(), static_cast<int>(n));

  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  s.hbf.analog.resize(n, options.n_rf);
  for (Eigen::Index k = 0; k < s.hbf.analog.size(); ++k) s.hbf.analog(k) = std::polar(1.0, phase(rng));

  const CMat& fa = s.hbf.analog;
  s.hbf.digital = (fa.adjoint() * fa).ldlt().solve(fa.adjoint() * channel);
  double norm = (fa * s.hbf.digital).norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    s.hbf.digital = CMat::Identity(options.n_rf, users);
    norm = (fa * s.hbf.digital).norm();
  }
  s.hbf.digital *= std::sqrt(options.power_budget) / norm;

  const CMat x = s.hbf.precoder();
  s.T = x;
  s.V = update_V(x, s.grid_steering, spec).V;
  s.zeta = update_zeta(x, s.V, s.grid_steering, spec);
  const double floor = min_surrogate_mse(beampattern_target(s.V, s.zeta, qcqp), qcqp);
  if (floor >= spec.mse_budget)
    throw InfeasibleError("beampattern budget below the least-squares fit of the initial precoder", floor);
  s.U = project_beampattern(x, beampattern_target(s.V, s.zeta, qcqp), qcqp, spec.mse_budget).U;
  s.Z = project_columns_to_ball(x.adjoint() * s.notch_steering, spec.notch_budget);
  s.omega = CMat::Zero(n, users);
  s.lambda = CMat::Zero(n, users);
  s.phi = CMat::Zero(users, s.notch_steering.cols());
  return s;
}

}  // namespace coisac
