#include <doctest.h>

#include <vector>

#include "coisac/hbf.hpp"
#include "support.hpp"

using namespace coisac;
using coisac::testing::desk_params;
using coisac::testing::desk_scene;
using coisac::testing::random_cmat;
using coisac::testing::random_phases;

namespace {

double neg_weighted_log_rate(const std::vector<CMat>& h, const std::vector<CMat>& t, const RVec& w,
                             const RVec& noise) {
  const RVec sinr = user_sinr(effective_downlink(h, t), noise);
  double f = 0.0;
  for (Eigen::Index u = 0; u < sinr.size(); ++u) f -= w(u) * std::log1p(sinr(u));
  return f;
}

struct Fixture {
  NetworkScene scene = desk_scene();
  BeampatternSpec spec;
  BeampatternQcqp qcqp;
  ApSolverState state;
  PenaltyConfig pen;

  explicit Fixture(std::uint64_t seed, double gamma = 4.0) {
    std::mt19937_64 rng(seed);
    BeampatternParams p = desk_params(gamma);
    p.mse_budget *= scene.tx_power_budget;
    p.notch_budget *= scene.tx_power_budget;
    spec = build_beampattern_spec(scene, 0, p);
    const CMat grid = steering_matrix(spec.grid_angles, scene.n_tx);
    qcqp = BeampatternQcqp::build(grid, spec.weights);
    const ChannelSet ch = generate_channels(scene, seed);
    state = initialize_state(ch.per_ap[0], spec, qcqp, {scene.tx_power_budget, scene.n_rf}, rng);
    // Move every block off consensus so the updates have work to do.
    const double s = std::sqrt(scene.tx_power_budget);
    const Eigen::Index n = state.T.rows(), u = state.T.cols();
    state.T = random_cmat(n, u, rng);
    state.T *= s / state.T.norm();
    state.omega = 0.1 * random_cmat(n, u, rng);
    state.lambda = 0.1 * random_cmat(n, u, rng);
    state.phi = 0.01 * random_cmat(u, state.notch_steering.cols(), rng);
    state.U += 0.2 * random_cmat(n, u, rng);
    state.Z = project_columns_to_ball(random_cmat(u, state.notch_steering.cols(), rng), spec.notch_budget);
  }
};

}  // namespace

TEST_CASE("auxiliary scalars make the surrogate tight and a majorizer") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const int aps = 1 + trial % 3, users = 2 + trial % 2, n = 5;
    std::vector<CMat> h, t;
    for (int a = 0; a < aps; ++a) {
      h.push_back(random_cmat(n, users, rng));
      t.push_back(random_cmat(n, users, rng));
    }
    const RVec w = RVec::LinSpaced(users, 0.5, 1.0), noise = RVec::Constant(users, 0.3);
    const AuxScalars aux = update_r_eta(effective_downlink(h, t), w, noise);
    CHECK(aux.r.isApprox(user_sinr(effective_downlink(h, t), noise), 1e-12));
    const double tight = surrogate_objective(std::span<const CMat>(h), std::span<const CMat>(t), aux, noise);
    CHECK(tight == doctest::Approx(neg_weighted_log_rate(h, t, w, noise)).epsilon(1e-10));
    for (int k = 0; k < 20; ++k) {
      std::vector<CMat> other;
      for (const auto& m : t) other.push_back(m + 0.5 * random_cmat(n, users, rng));
      const double upper = surrogate_objective(std::span<const CMat>(h), std::span<const CMat>(other), aux, noise);
      CHECK(upper >= neg_weighted_log_rate(h, other, w, noise) - 1e-10);
    }
  }
}

TEST_CASE("coupled gradient and linear coefficient match finite differences") {
  std::mt19937_64 rng(2);
  const int aps = 2, n = 4, users = 3;
  std::vector<CMat> h, t;
  for (int a = 0; a < aps; ++a) {
    h.push_back(random_cmat(n, users, rng));
    t.push_back(random_cmat(n, users, rng));
  }
  const RVec w = RVec::Ones(users), noise = RVec::Constant(users, 0.4);
  const AuxScalars aux = update_r_eta(effective_downlink(h, t), w, noise);
  auto f = [&](const std::vector<CMat>& x) {
    return surrogate_objective(std::span<const CMat>(h), std::span<const CMat>(x), aux, noise);
  };
  const CMat xi = effective_downlink(h, t);
  for (int a = 0; a < aps; ++a) {
    const CMat grad = coupled_gradient(h[a], aux, xi) + linear_coefficient(h[a], aux).adjoint();
    const CMat d = random_cmat(n, users, rng);
    const double step = 1e-6;
    auto plus = t, minus = t;
    plus[a] += step * d;
    minus[a] -= step * d;
    const double fd = (f(plus) - f(minus)) / (2 * step);
    CHECK(fd == doctest::Approx((grad.adjoint() * d).trace().real()).epsilon(1e-6));
  }
}

TEST_CASE("T step maximizes the linearized objective on the power sphere") {
  Fixture fx(3);
  std::mt19937_64 rng(30);
  const CMat grad = random_cmat(fx.state.T.rows(), fx.state.T.cols(), rng);
  const CMat lin = random_cmat(fx.state.T.cols(), fx.state.T.rows(), rng);
  const double alpha = 3.0, rho = 1.0, e = fx.scene.tx_power_budget;
  const TUpdate up = update_T(fx.state, grad, lin, alpha, rho, e);
  CHECK(up.T.squaredNorm() == doctest::Approx(e));
  CHECK_FALSE(up.degenerate);
  auto objective = [&](const CMat& t) {
    return (lin * t).trace().real() + (grad.adjoint() * t).trace().real() +
           0.5 * alpha * (t - fx.state.T).squaredNorm() +
           0.5 * rho * (t - fx.state.hbf.precoder() + fx.state.omega).squaredNorm();
  };
  const double best = objective(up.T);
  for (int k = 0; k < 300; ++k) {
    CMat t = random_cmat(up.T.rows(), up.T.cols(), rng);
    t *= std::sqrt(e) / t.norm();
    CHECK(objective(t) >= best - 1e-9);
    CMat near = up.T + 0.05 * t;
    near *= std::sqrt(e) / near.norm();
    CHECK(objective(near) >= best - 1e-9);
  }
}

TEST_CASE("beampattern projection agrees with a dense dual search") {
  Fixture fx(4);
  const CMat g2 = beampattern_target(fx.state.V, fx.state.zeta, fx.qcqp);
  const double gamma = fx.spec.mse_budget;
  const double l = fx.qcqp.grid_size;
  const CMat gram = fx.qcqp.g1.adjoint() * fx.qcqp.g1;
  const CMat rhs = fx.qcqp.g1.adjoint() * g2;
  const Eigen::Index n = gram.rows();
  std::mt19937_64 rng(40);

  for (double scale : {3.0, 10.0, 30.0}) {
    const CMat target = scale * random_cmat(n, fx.state.T.cols(), rng);
    const UUpdate up = project_beampattern(target, g2, fx.qcqp, gamma);
    const double mse = (fx.qcqp.g1 * up.U - g2).squaredNorm() / l;
    CHECK(mse <= gamma * (1.0 + 1e-9));
    CHECK(up.mse == doctest::Approx(mse).epsilon(1e-9));

    // Dual function q(eps) = min_U ||U - D||^2 + eps (||G1 U - G2||^2 - L gamma), by dense solves.
    auto dual = [&](double log_eps) {
      const double eps = std::exp(log_eps);
      const CMat u = (CMat::Identity(n, n) + eps * gram).ldlt().solve(target + eps * rhs);
      return (u - target).squaredNorm() + eps * ((fx.qcqp.g1 * u - g2).squaredNorm() - l * gamma);
    };
    double lo = -30.0, hi = 10.0;
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200; ++it) {
      const double a = hi - golden * (hi - lo), b = lo + golden * (hi - lo);
      if (dual(a) < dual(b))
        lo = a;
      else
        hi = b;
    }
    const double dual_best = std::max(dual(0.5 * (lo + hi)), 0.0);
    const double primal = (up.U - target).squaredNorm();
    CHECK(primal == doctest::Approx(dual_best).epsilon(1e-6));
    if (up.multiplier > 0.0) CHECK(mse == doctest::Approx(gamma).epsilon(1e-8));
  }

  // A target already inside the set is returned unchanged.
  const CMat feasible = project_beampattern(30.0 * random_cmat(n, fx.state.T.cols(), rng), g2, fx.qcqp, gamma).U;
  const UUpdate again = project_beampattern(feasible, g2, fx.qcqp, gamma * 1.01);
  CHECK(again.multiplier == 0.0);
  CHECK(again.U == feasible);
}

TEST_CASE("least-squares floor and infeasible budgets") {
  Fixture fx(5);
  const CMat g2 = beampattern_target(fx.state.V, fx.state.zeta, fx.qcqp);
  const CMat u_ls = fx.qcqp.g1.completeOrthogonalDecomposition().solve(g2);
  const double floor = (fx.qcqp.g1 * u_ls - g2).squaredNorm() / fx.qcqp.grid_size;
  CHECK(min_surrogate_mse(g2, fx.qcqp) == doctest::Approx(floor).epsilon(1e-8));
  try {
    project_beampattern(CMat::Zero(u_ls.rows(), u_ls.cols()) + 50.0 * CMat::Ones(u_ls.rows(), u_ls.cols()), g2,
                        fx.qcqp, 0.5 * floor);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.min_mse() == doctest::Approx(floor).epsilon(1e-8));
  }
}

TEST_CASE("notch projection is the nearest point of the ball product") {
  std::mt19937_64 rng(6);
  const CMat d = random_cmat(3, 7, rng);
  const double budget = 1.5;
  const CMat z = project_columns_to_ball(d, budget);
  for (Eigen::Index t = 0; t < z.cols(); ++t) {
    CHECK(z.col(t).squaredNorm() <= budget * (1.0 + 1e-12));
    if (d.col(t).squaredNorm() <= budget) CHECK(z.col(t) == d.col(t));
  }
  for (int k = 0; k < 500; ++k) {
    CMat y = random_cmat(3, 7, rng);
    y = project_columns_to_ball(y, budget * 0.999);  // any feasible point
    CHECK((y - d).squaredNorm() >= (z - d).squaredNorm() - 1e-12);
  }
  Fixture fx(6);
  const CMat zz = update_Z(fx.state, fx.spec.notch_budget);
  CHECK(zz.cols() == fx.spec.notch_count());
  CHECK(zz.colwise().squaredNorm().maxCoeff() <= fx.spec.notch_budget * (1.0 + 1e-12));
}

TEST_CASE("V and zeta minimize the surrogate MSE") {
  Fixture fx(7);
  std::mt19937_64 rng(70);
  const CMat u = random_cmat(fx.state.T.rows(), fx.state.T.cols(), rng);
  const VUpdate v = update_V(u, fx.state.grid_steering, fx.spec);
  const double zeta = update_zeta(u, v.V, fx.state.grid_steering, fx.spec);
  CHECK_FALSE(v.degenerate);
  for (int l = 0; l < fx.spec.grid_size(); ++l)
    CHECK(v.V.col(l).squaredNorm() == doctest::Approx(fx.spec.desired(l)));
  const double best = surrogate_mse(u, v.V, zeta, fx.state.grid_steering, fx.spec);
  CHECK(surrogate_mse(u, v.V, zeta, fx.spec) == doctest::Approx(best));
  for (double dz : {-0.05, 0.05}) CHECK(surrogate_mse(u, v.V, zeta * (1 + dz), fx.state.grid_steering, fx.spec) > best);
  for (int k = 0; k < 100; ++k) {
    CMat other = random_cmat(v.V.rows(), v.V.cols(), rng);
    for (int l = 0; l < fx.spec.grid_size(); ++l)
      other.col(l) *= std::sqrt(fx.spec.desired(l)) / other.col(l).norm();
    CHECK(surrogate_mse(u, other, zeta, fx.state.grid_steering, fx.spec) >= best - 1e-12);
  }
}

TEST_CASE("digital precoder solves the stacked least squares exactly") {
  Fixture fx(8);
  const PrecoderLeastSquares ls = precoder_least_squares(fx.state, fx.pen);
  const DigitalUpdate up = update_FD(fx.state, fx.pen);
  const CMat reference = (ls.w1 * fx.state.hbf.analog).colPivHouseholderQr().solve(ls.w2);
  CHECK((up.digital - reference).norm() < 1e-8 * reference.norm());
  CHECK_FALSE(up.regularized);

  // Rank-deficient analog matrix falls back to the ridge.
  ApSolverState s = fx.state;
  s.hbf.analog.col(1) = s.hbf.analog.col(0);
  CHECK(update_FD(s, fx.pen).regularized);
}

TEST_CASE("analog gradient matches finite differences") {
  Fixture fx(9);
  std::mt19937_64 rng(90);
  const PrecoderLeastSquares ls = precoder_least_squares(fx.state, fx.pen);
  const CMat& fa = fx.state.hbf.analog;
  const CMat& fd = fx.state.hbf.digital;
  const CMat d = random_cmat(fa.rows(), fa.cols(), rng);
  const double h = 1e-6;
  const double numeric = (ls.objective(fa + h * d, fd) - ls.objective(fa - h * d, fd)) / (2 * h);
  const double analytic = 2.0 * (ls.analog_gradient(fa, fd).adjoint() * d).trace().real();
  CHECK(numeric == doctest::Approx(analytic).epsilon(1e-6));
}

TEST_CASE("BSUM phase step and analog update") {
  std::mt19937_64 rng(10);
  const CMat w = random_cmat(6, 3, rng);
  const CMat f = bsum_phase_step(w);
  const double best = (w.adjoint() * f).trace().real();
  for (Eigen::Index k = 0; k < f.size(); ++k) CHECK(std::abs(f(k)) == doctest::Approx(1.0));
  CHECK(best == doctest::Approx(-w.cwiseAbs().sum()));
  for (int k = 0; k < 200; ++k) CHECK((w.adjoint() * random_phases(6, 3, rng)).trace().real() >= best - 1e-12);

  Fixture fx(10);
  const PrecoderLeastSquares ls = precoder_least_squares(fx.state, fx.pen);
  const double before = ls.objective(fx.state.hbf.analog, fx.state.hbf.digital);
  const AnalogUpdate up = update_FA(fx.state, fx.pen, 200, 1e-12);
  CHECK(up.monotone);
  CHECK(up.iterations >= 1);
  CHECK(up.objective <= before + 1e-9 * before);
  CHECK(ls.objective(up.analog, fx.state.hbf.digital) == doctest::Approx(up.objective).epsilon(1e-9));
  CHECK((up.analog.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("state initialization is feasible") {
  Fixture fx(11);
  const NetworkScene s = fx.scene;
  std::mt19937_64 rng(11);
  const ChannelSet ch = generate_channels(s, 11);
  const ApSolverState st = initialize_state(ch.per_ap[0], fx.spec, fx.qcqp, {s.tx_power_budget, s.n_rf}, rng);
  CHECK(st.hbf.precoder().squaredNorm() == doctest::Approx(s.tx_power_budget));
  CHECK(st.T == st.hbf.precoder());
  CHECK(surrogate_mse(st.U, st.V, st.zeta, st.grid_steering, fx.spec) <= fx.spec.mse_budget * (1 + 1e-9));
  CHECK(st.Z.colwise().squaredNorm().maxCoeff() <= fx.spec.notch_budget * (1 + 1e-12));
  CHECK(st.zeta >= 0.0);
  CHECK(st.omega.norm() == 0.0);
  CHECK(st.phi.cols() == fx.spec.notch_count());
}

TEST_CASE("dual update and consensus residual") {
  Fixture fx(12);
  ApSolverState s = fx.state;
  const CMat x = s.hbf.precoder();
  const double expected = std::max({(s.T - x).norm(), (s.U - x).norm(), (s.Z - x.adjoint() * s.notch_steering).norm()});
  CHECK(consensus_residual(s) == doctest::Approx(expected));
  const CMat omega = s.omega;
  dual_update(s);
  CHECK((s.omega - omega - (s.T - x)).norm() < 1e-12);
  const double pen = agent_penalty(s, fx.pen);
  CHECK(pen == doctest::Approx(penalty_term(s.T, x, s.omega, 1.0) + penalty_term(s.U, x, s.lambda, 1.0) +
                               penalty_term(s.Z, x.adjoint() * s.notch_steering, s.phi, 1.0)));
}
