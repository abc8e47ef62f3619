#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "coisac/special.hpp"

namespace coisac::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const RunContext& ctx, const std::vector<std::string>& notes) {
    std::filesystem::create_directories(path.parent_path());
    out_.open(path);
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << "# config_hash=" << config_hash(ctx.config) << " seed=" << ctx.config.seed << "\n";
    for (const auto& n : notes) out_ << "# " << n << "\n";
  }

  void header(const std::vector<std::string>& columns) { row(columns); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string num(long v) { return std::to_string(v); }
std::string num(int v) { return std::to_string(v); }

void log_line(const RunContext& ctx, const std::string& text) {
  if (ctx.log) *ctx.log << text << std::endl;
}

SolveResult solve(const ExperimentConfig& cfg, const Problem& problem, std::uint64_t seed, int threads) {
  SolverOptions o = cfg.solver;
  o.seed = seed;
  o.threads = threads;
  return cfg.algorithm == Algorithm::Centralized ? run_centralized_admm(problem, o)
                                                 : run_panda_distributed(problem, o);
}

Problem build_problem(const ExperimentConfig& cfg, const NetworkScene& scene, const BeampatternParams& params,
                      int trial) {
  Problem p = Problem::build(scene, trial_channel_seed(cfg.seed, trial), params);
  p.weights = cfg.weights;
  return p;
}

int status_of(const SolveResult& r) {
  return r.reason == TerminationReason::IterationCap ? kIterationCap : kOk;
}

/// Infeasibility outranks hitting the iteration cap.
int combine(int a, int b) {
  if (a == kInfeasible || b == kInfeasible) return kInfeasible;
  if (a == kIterationCap || b == kIterationCap) return kIterationCap;
  return kOk;
}

int report_infeasible(const RunContext& ctx, const InfeasibleError& e) {
  log_line(ctx, std::string("infeasible: ") + e.what() + " (AP " + std::to_string(e.agent()) + ", iteration " +
                    std::to_string(e.iteration()) + ", minimum achievable MSE " + num(e.min_mse()) + ")");
  return kInfeasible;
}

std::vector<CMat> precoders_of(const std::vector<HbfState>& states) {
  std::vector<CMat> out;
  for (const auto& s : states) out.push_back(s.precoder());
  return out;
}

/// Smallest over targets of the AP-summed radar SINR; NaN without targets.
double min_sum_radar_sinr(const NetworkScene& scene, const std::vector<CMat>& precoders, const RadarParams& radar) {
  if (scene.target_positions.empty()) return kNaN;
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < static_cast<int>(scene.target_positions.size()); ++t)
    best = std::min(best, sum_radar_sinr(build_detection_model(scene, precoders, t, radar)));
  return best;
}

void write_beampatterns(const RunContext& ctx, const Problem& problem, const SolveResult& r) {
  for (int a = 0; a < problem.num_aps(); ++a) {
    const BeampatternSpec& spec = problem.specs[a];
    const RVec pattern = beampattern_on_grid(r.states[a].precoder(), spec.grid_angles);
    const double peak = std::max(pattern.maxCoeff(), std::numeric_limits<double>::min());
    std::vector<char> notch(spec.grid_size(), 0);
    for (int idx : spec.notch_indices) notch[idx] = 1;
    CsvFile csv(ctx.out_dir / ("beampattern_ap" + std::to_string(a) + ".csv"), ctx,
                {"power_db is normalized to the peak over the grid; power_dbm is absolute",
                 "notch_budget_dbm=" + num(lin2db(spec.notch_budget)) + " peak_dbm=" + num(lin2db(peak))});
    csv.header({"angle_deg", "power_db", "power_dbm", "region"});
    for (int l = 0; l < spec.grid_size(); ++l) {
      const char* region = spec.desired(l) > 0.0 ? "mainlobe" : notch[l] ? "notch" : "other";
      csv.row({num(rad2deg(spec.grid_angles(l))), num(lin2db(std::max(pattern(l), 1e-300) / peak)),
               num(lin2db(std::max(pattern(l), 1e-300))), region});
    }
  }
}

struct DetectionSetup {
  DetectionModel model;
  int status = kOk;
};

DetectionSetup detection_setup(const RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.config;
  const NetworkScene& scene = cfg.scene;
  if (scene.target_positions.empty())
    throw ConfigError("scene.target_positions_m", "detection needs at least one target");
  if (cfg.detection.target >= static_cast<int>(scene.target_positions.size()))
    throw ConfigError("detection.target", "index exceeds the number of targets");

  DetectionSetup out;
  std::vector<CMat> precoders;
  if (cfg.detection.sinr_source == SinrSource::Design) {
    const Problem problem = build_problem(cfg, scene, cfg.beampattern, 0);
    const SolveResult r = solve(cfg, problem, trial_solver_seed(cfg.seed, 0), ctx.threads);
    out.status = status_of(r);
    precoders = precoders_of(r.states);
    log_line(ctx, "design: " + to_string(r.reason) + " after " + num(r.iterations) + " iterations, WSR " +
                      num(r.final_wsr));
  } else {
    std::mt19937_64 rng(derive_stream_seed(cfg.seed, 0x5eed));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int a = 0; a < scene.num_aps(); ++a) {
      CMat x(scene.n_tx, scene.num_ues());
      for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = cd(normal(rng), normal(rng));
      precoders.push_back(x * (std::sqrt(scene.tx_power_budget) / x.norm()));
    }
  }
  out.model = build_detection_model(scene, precoders, cfg.detection.target, cfg.detection.radar);
  return out;
}

std::vector<double> sorted_pr_fa(const DetectionConfig& d) {
  std::vector<double> p = d.pr_fa;
  std::sort(p.begin(), p.end());
  return p;
}

}  // namespace

std::uint64_t trial_channel_seed(std::uint64_t seed, int trial) {
  return derive_stream_seed(seed, 2 * static_cast<std::uint64_t>(trial));
}

std::uint64_t trial_solver_seed(std::uint64_t seed, int trial) {
  return derive_stream_seed(seed, 2 * static_cast<std::uint64_t>(trial) + 1);
}

int cmd_design(const RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.config;
  const Problem problem = build_problem(cfg, cfg.scene, cfg.beampattern, 0);
  SolveResult r;
  try {
    r = solve(cfg, problem, trial_solver_seed(cfg.seed, 0), ctx.threads);
  } catch (const InfeasibleError& e) {
    return report_infeasible(ctx, e);
  }
  const int aps = problem.num_aps();

  CsvFile diag(ctx.out_dir / "diagnostics.csv", ctx,
               {"residuals are Frobenius norms; mse is the quadratic surrogate MSE of the beampattern copy"});
  std::vector<std::string> cols{"iter", "al", "al_after_primal", "surrogate", "wsr", "max_primal_residual",
                                "max_consensus_residual"};
  for (int a = 0; a < aps; ++a) {
    cols.push_back("mse_ap" + std::to_string(a));
    cols.push_back("beampattern_mse_ap" + std::to_string(a));
    cols.push_back("notch_max_ap" + std::to_string(a));
  }
  cols.push_back("exchanged_scalars");
  cols.push_back("wall_ms");
  diag.header(cols);
  for (const auto& rep : r.reports) {
    std::vector<std::string> row{num(rep.iteration), num(rep.augmented_lagrangian), num(rep.al_after_primal),
                                 num(rep.surrogate_objective), num(rep.wsr),
                                 num(*std::max_element(rep.primal_residuals.begin(), rep.primal_residuals.end())),
                                 num(*std::max_element(rep.consensus_residuals.begin(), rep.consensus_residuals.end()))};
    for (int a = 0; a < aps; ++a) {
      row.push_back(num(rep.surrogate_mse[a]));
      row.push_back(num(rep.beampattern_mse[a]));
      row.push_back(num(rep.notch_max[a]));
    }
    row.push_back(num(rep.exchanged_scalars));
    row.push_back(num(rep.wall_ms));
    diag.row(row);
  }

  CsvFile summary(ctx.out_dir / "summary.csv", ctx,
                  {"algorithm=" + std::string(cfg.algorithm == Algorithm::Centralized ? "centralized" : "panda") +
                   " termination=" + to_string(r.reason) + " iterations=" + num(r.iterations) +
                   " final_wsr=" + num(r.final_wsr) + " total_ms=" + num(r.total_ms)});
  summary.header({"ap", "power", "power_budget", "surrogate_mse", "mse_budget", "notch_max", "notch_budget",
                  "primal_residual", "output_scale"});
  for (int a = 0; a < aps; ++a) {
    const ApSolverState& st = r.solver_states[a];
    const BeampatternSpec& spec = problem.specs[a];
    const CMat x = r.states[a].precoder();
    summary.row({num(a), num(x.squaredNorm()), num(problem.scene.tx_power_budget),
                 num(surrogate_mse(st.U, st.V, st.zeta, st.grid_steering, spec)), num(spec.mse_budget),
                 num(max_notch_power(x, spec)), num(spec.notch_budget), num((st.T - st.hbf.precoder()).norm()),
                 num(r.output_scale[a])});
  }
  write_beampatterns(ctx, problem, r);
  log_line(ctx, "design: " + to_string(r.reason) + " after " + num(r.iterations) + " iterations, WSR " +
                    num(r.final_wsr) + " bit/s/Hz");
  return status_of(r);
}

int cmd_sweep(const RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.config;
  if (!cfg.sweep) throw ConfigError("sweep", "is required for the sweep command");
  const SweepConfig& sw = *cfg.sweep;

  struct Row {
    double wsr = kNaN;
    double min_sum_sinr = kNaN;
    int iterations = 0;
    double wall_ms = 0.0;
    std::string termination;
    int status = kOk;
  };
  const int n_tasks = static_cast<int>(sw.values.size()) * sw.trials;
  std::vector<Row> rows(n_tasks);

  auto run_task = [&](int task) {
    const double value = sw.values[task / sw.trials];
    const int trial = task % sw.trials;
    NetworkScene scene = cfg.scene;
    BeampatternParams params = cfg.beampattern;
    switch (sw.variable) {
      case SweepVariable::Gamma: params.mse_budget = value; break;
      case SweepVariable::GammaNotch: params.notch_budget = db2lin(value); break;
      case SweepVariable::NTx: scene.n_tx = static_cast<int>(value); break;
      case SweepVariable::NRf: scene.n_rf = static_cast<int>(value); break;
    }
    Row& row = rows[task];
    try {
      scene.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("sweep.values", std::string("value ") + num(value) + " gives an invalid scene: " + e.what());
    }
    const Problem problem = build_problem(cfg, scene, params, trial);
    try {
      const SolveResult r = solve(cfg, problem, trial_solver_seed(cfg.seed, trial), 1);
      row.wsr = r.final_wsr;
      row.min_sum_sinr = min_sum_radar_sinr(scene, precoders_of(r.states), cfg.detection.radar);
      row.iterations = r.iterations;
      row.wall_ms = r.total_ms;
      row.termination = to_string(r.reason);
      row.status = status_of(r);
    } catch (const InfeasibleError& e) {
      row.termination = "infeasible";
      row.status = kInfeasible;
      report_infeasible(ctx, e);
    }
  };

  // Workers pull tasks in order; rows are written afterwards by this thread.
  const int workers = std::clamp(ctx.threads, 1, std::max(1, n_tasks));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int task; (task = next.fetch_add(1)) < n_tasks;) {
      try {
        run_task(task);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  CsvFile csv(ctx.out_dir / "sweep.csv", ctx,
              {"param=" + to_string(sw.variable) +
               (sw.variable == SweepVariable::GammaNotch ? " (dB per unit transmit power)"
                : sw.variable == SweepVariable::Gamma    ? " (per unit transmit power)"
                                                         : "") +
               "; wsr in bit/s/Hz; min_sum_sinr is the smallest AP-summed radar SINR over targets"});
  csv.header({"param", "trial", "wsr", "min_sum_sinr", "iterations", "wall_ms", "termination"});
  int status = kOk;
  for (int task = 0; task < n_tasks; ++task) {
    const Row& row = rows[task];
    csv.row({num(sw.values[task / sw.trials]), num(task % sw.trials), num(row.wsr), num(row.min_sum_sinr),
             num(row.iterations), num(row.wall_ms), row.termination});
    status = combine(status, row.status);
  }
  log_line(ctx, "sweep: " + num(n_tasks) + " solves written to " + (ctx.out_dir / "sweep.csv").string());
  return status;
}

int cmd_roc(const RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.config;
  DetectionSetup setup;
  try {
    setup = detection_setup(ctx);
  } catch (const InfeasibleError& e) {
    return report_infeasible(ctx, e);
  }
  const DetectionModel& m = setup.model;
  const double sum_sinr = sum_radar_sinr(m);
  const std::vector<double> grid = sorted_pr_fa(cfg.detection);
  CsvFile csv(ctx.out_dir / "roc.csv", ctx,
              {"sum_sinr=" + num(sum_sinr) + " aps=" + num(m.num_aps()) + " trials=" + num(cfg.detection.trials)});
  csv.header({"pr_fa", "pr_d_analytic", "pr_d_mc", "mc_stderr"});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double threshold = detection_threshold(grid[i], m.num_aps());
    const MonteCarloDetection mc =
        monte_carlo_detection(m, threshold, cfg.detection.trials, derive_stream_seed(cfg.seed, 1000 + i), ctx.threads);
    csv.row({num(grid[i]), num(detection_probability(sum_sinr, grid[i], m.num_aps())), num(mc.pr_detect),
             num(mc.stderr_detect)});
  }
  log_line(ctx, "roc: sum radar SINR " + num(sum_sinr) + ", " + num(static_cast<int>(grid.size())) + " points");
  return setup.status;
}

int cmd_detect_mc(const RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.config;
  DetectionSetup setup;
  try {
    setup = detection_setup(ctx);
  } catch (const InfeasibleError& e) {
    return report_infeasible(ctx, e);
  }
  const DetectionModel& m = setup.model;
  const double sum_sinr = sum_radar_sinr(m);

  CsvFile per_ap(ctx.out_dir / "radar_sinr.csv", ctx, {"noise_power=" + num(m.noise_power)});
  per_ap.header({"ap", "radar_sinr", "radar_sinr_db"});
  for (int a = 0; a < m.num_aps(); ++a) {
    const double s = radar_sinr(m, a);
    per_ap.row({num(a), num(s), num(lin2db(s))});
  }

  CsvFile csv(ctx.out_dir / "detect_mc.csv", ctx, {"aps=" + num(m.num_aps())});
  csv.header({"pr_fa", "threshold", "sum_sinr", "pr_d_analytic", "pr_d_mc", "pr_d_stderr", "pr_fa_mc",
              "pr_fa_stderr", "trials"});
  for (std::size_t i = 0; i < cfg.detection.pr_fa.size(); ++i) {
    const double pfa = cfg.detection.pr_fa[i];
    const double threshold = detection_threshold(pfa, m.num_aps());
    const MonteCarloDetection mc =
        monte_carlo_detection(m, threshold, cfg.detection.trials, derive_stream_seed(cfg.seed, 2000 + i), ctx.threads);
    csv.row({num(pfa), num(threshold), num(sum_sinr), num(detection_probability(sum_sinr, pfa, m.num_aps())),
             num(mc.pr_detect), num(mc.stderr_detect), num(mc.pr_false_alarm), num(mc.stderr_false_alarm),
             num(mc.trials)});
  }
  log_line(ctx, "detect-mc: sum radar SINR " + num(sum_sinr));
  return setup.status;
}

}  // namespace coisac::cli
