#include "coisac/runtime.hpp"

#include <barrier>
#include <chrono>
#include <exception>
#include <functional>
#include <stdexcept>
#include <thread>

#include "coisac/detection.hpp"
#include "coisac/metrics.hpp"

namespace coisac {

Problem Problem::build(const NetworkScene& scene, std::uint64_t channel_seed,
                       const BeampatternParams& params) {
  scene.validate();
  Problem p;
  p.scene = scene;
  p.channels = generate_channels(scene, channel_seed);
  BeampatternParams absolute = params;
  absolute.mse_budget *= scene.tx_power_budget;
  absolute.notch_budget *= scene.tx_power_budget;
  for (int a = 0; a < scene.num_aps(); ++a) p.specs.push_back(build_beampattern_spec(scene, a, absolute));
  p.weights = RVec::Ones(scene.num_ues());
  p.noises.resize(scene.num_ues());
  for (int u = 0; u < scene.num_ues(); ++u) p.noises(u) = scene.comm_noise(u);
  return p;
}

void Problem::validate() const {
  scene.validate();
  const int aps = scene.num_aps();
  if (static_cast<int>(channels.per_ap.size()) != aps) throw std::invalid_argument("channels: one matrix per AP required");
  if (static_cast<int>(specs.size()) != aps) throw std::invalid_argument("specs: one beampattern spec per AP required");
  if (weights.size() != scene.num_ues() || noises.size() != scene.num_ues())
    throw std::invalid_argument("weights: one entry per UE required");
  for (const auto& h : channels.per_ap)
    if (h.rows() != scene.n_tx || h.cols() != scene.num_ues())
      throw std::invalid_argument("channels: matrix must be n_tx x U");
  for (const auto& s : specs)
    if (s.grid_size() < 1 || !(s.mse_budget > 0.0) || !(s.notch_budget > 0.0))
      throw std::invalid_argument("specs: grid, mse_budget and notch_budget must be positive");
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

/// Fixed set of workers released together per round; the calling thread is worker 0.
class WorkerPool {
 public:
  explicit WorkerPool(int workers)
      : workers_(std::max(1, workers)), start_(workers_), done_(workers_) {
    for (int w = 1; w < workers_; ++w) threads_.emplace_back([this, w] { loop(w); });
  }
  ~WorkerPool() {
    if (workers_ > 1) {
      stop_ = true;
      start_.arrive_and_wait();
    }
  }
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  /// Runs task(i) for i in [0, n); task i always lands on worker i % workers.
  /// Exceptions are collected per task and the lowest-index one is rethrown.
  void run(int n, const std::function<void(int)>& task) {
    errors_.assign(n, nullptr);
    task_ = &task;
    n_ = n;
    if (workers_ > 1) start_.arrive_and_wait();
    share(0);
    if (workers_ > 1) done_.arrive_and_wait();
    for (auto& e : errors_)
      if (e) std::rethrow_exception(e);
  }

 private:
  void share(int w) {
    for (int i = w; i < n_; i += workers_) {
      try {
        (*task_)(i);
      } catch (...) {
        errors_[i] = std::current_exception();
      }
    }
  }
  void loop(int w) {
    for (;;) {
      start_.arrive_and_wait();
      if (stop_) return;
      share(w);
      done_.arrive_and_wait();
    }
  }

  int workers_;
  std::barrier<> start_;
  std::barrier<> done_;
  std::vector<std::jthread> threads_;
  const std::function<void(int)>* task_ = nullptr;
  int n_ = 0;
  bool stop_ = false;
  std::vector<std::exception_ptr> errors_;
};

enum class Mode { Distributed, Centralized };

CMat sum_messages(const std::vector<ApAgent>& agents) {
  CMat xi = agents.front().message();
  for (std::size_t a = 1; a < agents.size(); ++a) xi += agents[a].message();
  return xi;
}

double t_block_objective(const std::vector<ApAgent>& agents, const CMat& xi) {
  double total = (j1_diagonal(agents.front().aux()).asDiagonal() * xi).squaredNorm();
  for (const auto& agent : agents) total += agent.local_t_objective();
  return total;
}

void rethrow_located(int iteration) {
  try {
    throw;
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(std::string(e.what()) + " (AP " + std::to_string(e.agent()) + ", iteration " +
                              std::to_string(iteration) + ")",
                          e.min_mse(), e.agent(), iteration);
  }
}

SolveResult drive(const Problem& problem, const SolverOptions& options, Mode mode) {
  problem.validate();
  options.penalties.validate();
  const int n_aps = problem.num_aps();
  const int n_users = problem.num_users();
  const double budget = problem.scene.tx_power_budget;
  const auto t_start = Clock::now();

  AgentOptions agent_opts;
  agent_opts.penalties = options.penalties;
  agent_opts.power_budget = budget;
  agent_opts.n_rf = problem.scene.n_rf;
  agent_opts.bsum_max_iters = options.bsum_max_iters;
  agent_opts.bsum_tolerance = options.bsum_tolerance;
  agent_opts.weights = problem.weights;
  agent_opts.noises = problem.noises;

  std::vector<ApAgent> agents;
  agents.reserve(n_aps);
  for (int a = 0; a < n_aps; ++a) {
    try {
      agents.emplace_back(a, problem.channels.per_ap[a], problem.specs[a], agent_opts,
                          derive_stream_seed(options.seed, static_cast<std::uint64_t>(a)));
    } catch (const InfeasibleError& e) {
      throw InfeasibleError(e.what(), e.min_mse(), a, 0);
    }
  }

  SolveResult result;
  CMat gram = CMat::Zero(n_users, n_users);
  for (const auto& agent : agents) gram += agent.channel().adjoint() * agent.channel();
  result.setup_exchanged_scalars = static_cast<long>(n_aps) * n_users * n_users;

  CMat xi = sum_messages(agents);
  for (auto& agent : agents) agent.refresh_auxiliaries(xi, gram);
  double al_prev = 0.0;
  {
    double linear = 0.0;
    double penalties = 0.0;
    for (const auto& agent : agents) {
      linear += agent.linear_term();
      penalties += agent.penalty();
    }
    al_prev = surrogate_objective(xi, linear, agents.front().aux(), problem.noises) + penalties;
  }

  WorkerPool pool(std::min(options.threads, n_aps));
  std::vector<AgentStepOutput> outputs(n_aps);
  std::vector<CMat> channels = problem.channels.per_ap;

  for (int k = 1;; ++k) {
    const auto t_iter = Clock::now();
    IterationReport report;
    report.iteration = k;
    report.al_before = al_prev;
    // Broadcast round: every agent receives the sum of the U x U messages.
    report.exchanged_scalars = static_cast<long>(n_aps) * n_users * n_users;

    try {
      if (mode == Mode::Distributed) {
        pool.run(n_aps, [&](int a) {
          try {
            agents[a].refresh_auxiliaries(xi, gram);
            agents[a].proximal_T(xi);
            outputs[a] = agents[a].finish_iteration();
          } catch (const InfeasibleError& e) {
            throw InfeasibleError(e.what(), e.min_mse(), a, k);
          }
        });
      } else {
        pool.run(n_aps, [&](int a) { agents[a].refresh_auxiliaries(xi, gram); });
        if (options.central_t_block == TBlockSolver::Proximal) {
          pool.run(n_aps, [&](int a) { agents[a].proximal_T(xi); });
        } else {
          CMat current = xi;
          double objective = t_block_objective(agents, current);
          for (int sweep = 0; sweep < options.central_max_sweeps; ++sweep) {
            for (int a = 0; a < n_aps; ++a) {
              const CMat others = current - agents[a].message();
              agents[a].exact_T(others);
              current = others + agents[a].message();
            }
            const double next = t_block_objective(agents, current);
            const double change = std::abs(objective - next) / std::max(std::abs(next), 1e-300);
            objective = next;
            if (change < options.central_sweep_tolerance) break;
          }
        }
        pool.run(n_aps, [&](int a) {
          try {
            outputs[a] = agents[a].finish_iteration();
          } catch (const InfeasibleError& e) {
            throw InfeasibleError(e.what(), e.min_mse(), a, k);
          }
        });
      }
    } catch (const InfeasibleError&) {
      rethrow_located(k);
    }

    // Reduction in fixed AP order.
    CMat xi_next = outputs[0].message;
    double linear = outputs[0].linear_term;
    double pen_before = outputs[0].penalty_before_dual;
    double pen_after = outputs[0].penalty_after_dual;
    for (int a = 1; a < n_aps; ++a) {
      xi_next += outputs[a].message;
      linear += outputs[a].linear_term;
      pen_before += outputs[a].penalty_before_dual;
      pen_after += outputs[a].penalty_after_dual;
    }
    const double surrogate = surrogate_objective(xi_next, linear, agents.front().aux(), problem.noises);
    report.surrogate_objective = surrogate;
    report.al_after_primal = surrogate + pen_before;
    report.augmented_lagrangian = surrogate + pen_after;
    report.wall_ms = elapsed_ms(t_iter);

    std::vector<CMat> precoders;
    precoders.reserve(n_aps);
    for (int a = 0; a < n_aps; ++a) {
      const auto& st = agents[a].state();
      const auto& spec = problem.specs[a];
      const CMat x = st.hbf.precoder();
      report.primal_residuals.push_back(outputs[a].primal_residual);
      report.consensus_residuals.push_back(outputs[a].consensus_residual);
      report.dual_changes.push_back(outputs[a].dual_change);
      const RVec pattern = beampattern_from_steering(x, st.grid_steering);
      report.surrogate_mse.push_back(surrogate_mse(st.U, st.V, st.zeta, st.grid_steering, spec));
      report.beampattern_mse.push_back(
          beampattern_mse(pattern, spec, optimal_beampattern_scale(pattern, spec)));
      report.notch_max.push_back(max_notch_power(pattern, spec));
      precoders.push_back(x);
    }
    report.wsr = weighted_sum_rate(std::span<const CMat>(precoders), std::span<const CMat>(channels),
                                   problem.weights, problem.noises);

    xi = std::move(xi_next);
    al_prev = report.augmented_lagrangian;
    result.reports.push_back(std::move(report));
    if (auto reason = convergence_check(result.reports, options.penalties, budget)) {
      result.reason = *reason;
      break;
    }
  }

  result.iterations = static_cast<int>(result.reports.size());
  for (int a = 0; a < n_aps; ++a) {
    const ApSolverState& st = agents[a].state();
    HbfState out = st.hbf;
    double scale = 1.0;
    if (options.restore_feasibility) {
      // ADMM meets the notch and power limits only asymptotically; shrink the
      // digital precoder by the remaining violation so the output is feasible.
      const CMat x = out.precoder();
      const double notch = max_notch_power(beampattern_from_steering(x, st.grid_steering), problem.specs[a]);
      if (notch > problem.specs[a].notch_budget) scale = std::min(scale, std::sqrt(problem.specs[a].notch_budget / notch));
      const double power = x.squaredNorm();
      if (power > budget) scale = std::min(scale, std::sqrt(budget / power));
      out.digital *= scale;
    }
    result.output_scale.push_back(scale);
    result.states.push_back(std::move(out));
    result.solver_states.push_back(st);
  }
  result.final_wsr = weighted_sum_rate(std::span<const HbfState>(result.states),
                                       std::span<const CMat>(channels), problem.weights, problem.noises);
  result.total_ms = elapsed_ms(t_start);
  return result;
}

}  // namespace

SolveResult run_panda_distributed(const Problem& problem, const SolverOptions& options) {
  return drive(problem, options, Mode::Distributed);
}

SolveResult run_centralized_admm(const Problem& problem, const SolverOptions& options) {
  return drive(problem, options, Mode::Centralized);
}

}  // namespace coisac
