#include <benchmark/benchmark.h>

#include <random>

#include "coisac/hbf.hpp"
#include "coisac/runtime.hpp"
#include "coisac/special.hpp"
#include "support.hpp"

using namespace coisac;

namespace {

struct ApSetup {
  NetworkScene scene;
  BeampatternSpec spec;
  BeampatternQcqp qcqp;
  ApSolverState state;
  PenaltyConfig pen;

  explicit ApSetup(int n_tx) {
    scene = testing::desk_scene();
    scene.n_tx = scene.n_rx = n_tx;
    BeampatternParams p = testing::desk_params();
    p.mse_budget *= scene.tx_power_budget;
    p.notch_budget *= scene.tx_power_budget;
    spec = build_beampattern_spec(scene, 0, p);
    qcqp = BeampatternQcqp::build(steering_matrix(spec.grid_angles, scene.n_tx), spec.weights);
    std::mt19937_64 rng(3);
    const ChannelSet ch = generate_channels(scene, 3);
    state = initialize_state(ch.per_ap[0], spec, qcqp, {scene.tx_power_budget, scene.n_rf}, rng);
    state.U += testing::random_cmat(state.U.rows(), state.U.cols(), rng, 0.3);
  }
};

void BM_UpdateU(benchmark::State& bench) {
  const ApSetup s(static_cast<int>(bench.range(0)));
  for (auto _ : bench) benchmark::DoNotOptimize(update_U(s.state, s.spec, s.qcqp));
}
BENCHMARK(BM_UpdateU)->Arg(16)->Arg(32)->Arg(64);

void BM_UpdateFA(benchmark::State& bench) {
  const ApSetup s(static_cast<int>(bench.range(0)));
  for (auto _ : bench) benchmark::DoNotOptimize(update_FA(s.state, s.pen));
}
BENCHMARK(BM_UpdateFA)->Arg(16)->Arg(32)->Arg(64);

void BM_UpdateFD(benchmark::State& bench) {
  const ApSetup s(static_cast<int>(bench.range(0)));
  for (auto _ : bench) benchmark::DoNotOptimize(update_FD(s.state, s.pen));
}
BENCHMARK(BM_UpdateFD)->Arg(16)->Arg(32)->Arg(64);

void BM_DistributedIterations(benchmark::State& bench) {
  const Problem problem = Problem::build(testing::desk_scene(), 1, testing::desk_params());
  SolverOptions options;
  options.penalties.max_outer_iters = 50;
  options.penalties.min_outer_iters = 50;
  options.threads = static_cast<int>(bench.range(0));
  for (auto _ : bench) benchmark::DoNotOptimize(run_panda_distributed(problem, options));
  bench.SetItemsProcessed(bench.iterations() * options.penalties.max_outer_iters);
}
BENCHMARK(BM_DistributedIterations)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_MarcumQ(benchmark::State& bench) {
  const double a = std::sqrt(2.0 * 10.0);
  const double b = std::sqrt(2.0 * detection_threshold(1e-4, 3));
  for (auto _ : bench) benchmark::DoNotOptimize(marcum_q(3, a, b));
}
BENCHMARK(BM_MarcumQ);

void BM_DetectionThreshold(benchmark::State& bench) {
  for (auto _ : bench) benchmark::DoNotOptimize(detection_threshold(1e-4, 3));
}
BENCHMARK(BM_DetectionThreshold);

}  // namespace
BENCHMARK_MAIN();
