#include <doctest.h>

#include <vector>

#include "coisac/runtime.hpp"
#include "support.hpp"

using namespace coisac;
using coisac::testing::desk_params;
using coisac::testing::desk_scene;
using coisac::testing::random_cmat;

namespace {

double sphere_objective(const CMat& q, const CMat& b, const CMat& t) {
  return (t.adjoint() * q * t).trace().real() - 2.0 * (b.adjoint() * t).trace().real();
}

void check_sphere_optimum(const CMat& q, const CMat& b, double e, std::mt19937_64& rng) {
  const SphereQpSolution s = solve_sphere_qp(q, b, e);
  CHECK(s.T.squaredNorm() == doctest::Approx(e).epsilon(1e-9));
  // Stationarity (Q + mu I) T = B with Q + mu I positive semidefinite.
  const Eigen::Index n = q.rows();
  CHECK(((q + s.multiplier * CMat::Identity(n, n)) * s.T - b).norm() <= 1e-7 * std::max(b.norm(), 1.0));
  Eigen::SelfAdjointEigenSolver<CMat> eig(q);
  CHECK(eig.eigenvalues()(0) + s.multiplier >= -1e-9);
  const double best = sphere_objective(q, b, s.T);
  for (int k = 0; k < 300; ++k) {
    CMat t = random_cmat(n, b.cols(), rng);
    t *= std::sqrt(e) / t.norm();
    CHECK(sphere_objective(q, b, t) >= best - 1e-9 * std::max(std::abs(best), 1.0));
    CMat near = s.T + 0.02 * t;
    near *= std::sqrt(e) / near.norm();
    CHECK(sphere_objective(q, b, near) >= best - 1e-9 * std::max(std::abs(best), 1.0));
  }
}

Problem desk_problem(int aps = 3) {
  return Problem::build(desk_scene(aps), 2024, desk_params());
}

SolverOptions short_run(int iterations) {
  SolverOptions o;
  o.penalties.max_outer_iters = iterations;
  o.seed = 5;
  return o;
}

void check_identical(const SolveResult& a, const SolveResult& b) {
  REQUIRE(a.reports.size() == b.reports.size());
  CHECK(a.reason == b.reason);
  for (std::size_t k = 0; k < a.reports.size(); ++k) {
    CHECK(a.reports[k].augmented_lagrangian == b.reports[k].augmented_lagrangian);
    CHECK(a.reports[k].wsr == b.reports[k].wsr);
  }
  for (std::size_t s = 0; s < a.states.size(); ++s) {
    CHECK(a.states[s].analog == b.states[s].analog);
    CHECK(a.states[s].digital == b.states[s].digital);
  }
  CHECK(a.final_wsr == b.final_wsr);
}

}  // namespace

TEST_CASE("sphere QP: easy and hard cases") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const CMat h = random_cmat(6, 4, rng);
    const CMat q = h * h.adjoint();
    check_sphere_optimum(q, random_cmat(6, 2, rng), 3.0, rng);
    check_sphere_optimum(q, 1e-3 * random_cmat(6, 2, rng), 50.0, rng);
  }
  SUBCASE("B orthogonal to the bottom eigenspace") {
    const RVec diag = (RVec(4) << 0.5, 0.5, 2.0, 3.0).finished();
    CMat q = diag.cast<cd>().asDiagonal();
    CMat b = CMat::Zero(4, 1);
    b(2, 0) = 0.1;
    b(3, 0) = cd(0.0, 0.2);
    const SphereQpSolution s = solve_sphere_qp(q, b, 4.0);
    CHECK(s.hard_case);
    CHECK(s.multiplier == doctest::Approx(-0.5));
    check_sphere_optimum(q, b, 4.0, rng);
  }
  SUBCASE("zero linear term") {
    const CMat q = (RVec(3) << 2.0, 1.0, 5.0).finished().cast<cd>().asDiagonal();
    const SphereQpSolution s = solve_sphere_qp(q, CMat::Zero(3, 2), 2.0);
    CHECK(sphere_objective(q, CMat::Zero(3, 2), s.T) == doctest::Approx(2.0));
  }
}

TEST_CASE("problem construction scales budgets by the power budget") {
  const Problem p = desk_problem();
  CHECK(p.num_aps() == 3);
  CHECK(p.num_users() == 2);
  CHECK(p.specs[0].mse_budget == doctest::Approx(4.0 * 100.0));
  CHECK(p.specs[1].notch_budget == doctest::Approx(db2lin(-30.0) * 100.0));
  Problem bad = p;
  bad.specs.pop_back();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("distributed and centralized proximal runs coincide") {
  for (int aps : {1, 3}) {
    const Problem p = desk_problem(aps);
    SolverOptions o = short_run(15);
    o.central_t_block = TBlockSolver::Proximal;
    check_identical(run_panda_distributed(p, o), run_centralized_admm(p, o));
  }
}

TEST_CASE("results do not depend on the thread count") {
  const Problem p = desk_problem();
  SolverOptions o = short_run(20);
  const SolveResult one = run_panda_distributed(p, o);
  o.threads = 3;
  const SolveResult three = run_panda_distributed(p, o);
  check_identical(one, three);
  o.threads = 8;
  check_identical(one, run_panda_distributed(p, o));
}

TEST_CASE("exchange payload is A U^2 complex scalars per iteration") {
  const Problem p = desk_problem();
  const SolveResult r = run_panda_distributed(p, short_run(5));
  CHECK(r.setup_exchanged_scalars == 3 * 2 * 2);
  for (const auto& rep : r.reports) CHECK(rep.exchanged_scalars == 3 * 2 * 2);
}

TEST_CASE("primal sweeps never increase the augmented Lagrangian") {
  const Problem p = desk_problem();
  const SolveResult r = run_panda_distributed(p, short_run(60));
  for (const auto& rep : r.reports)
    CHECK(rep.al_after_primal <= rep.al_before + 1e-7 * std::abs(rep.al_before));
  CHECK(r.reports.back().consensus_residuals[0] < r.reports.front().consensus_residuals[0]);
}

TEST_CASE("returned precoders are feasible") {
  const Problem p = desk_problem();
  for (bool central : {false, true}) {
    const SolveResult r = central ? run_centralized_admm(p, short_run(40)) : run_panda_distributed(p, short_run(40));
    CHECK(r.reason == TerminationReason::IterationCap);
    CHECK(r.iterations == 40);
    CHECK(r.final_wsr > 0.0);
    for (int a = 0; a < p.num_aps(); ++a) {
      const CMat x = r.states[a].precoder();
      CHECK(x.squaredNorm() <= p.scene.tx_power_budget * (1.0 + 1e-9));
      CHECK(max_notch_power(x, p.specs[a]) <= p.specs[a].notch_budget * (1.0 + 1e-9));
      CHECK((r.states[a].analog.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
      CHECK(r.output_scale[a] <= 1.0);
    }
  }
}

TEST_CASE("an unreachable beampattern budget is reported with its AP") {
  const Problem p = Problem::build(desk_scene(), 2024, desk_params(1e-6));
  try {
    run_panda_distributed(p, short_run(5));
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.agent() >= 0);
    CHECK(e.agent() < 3);
    CHECK(e.min_mse() > 0.0);
  }
}

TEST_CASE("invalid penalties are rejected") {
  const Problem p = desk_problem();
  SolverOptions o = short_run(5);
  o.penalties.lambda = -1.0;
  CHECK_THROWS_AS(run_panda_distributed(p, o), std::invalid_argument);
}
