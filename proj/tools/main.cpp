#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace coisac::cli;

int main(int argc, char** argv) {
  CLI::App app{"Cooperative ISAC hybrid beamforming design and detection experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  long long seed = -1;
  int threads = 1;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Experiment configuration (JSON)")->required();
    cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", seed, "Override the configured seed")->check(CLI::NonNegativeNumber);
    cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  };
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunContext&);
  };
  const Command commands[] = {
      {"design", "Single design; per-iteration diagnostics and per-AP beampatterns", cmd_design},
      {"sweep", "Weighted sum rate versus a sweep variable", cmd_sweep},
      {"roc", "Analytic and Monte-Carlo detection probability over Pr_FA", cmd_roc},
      {"detect-mc", "Monte-Carlo detection report with per-AP radar SINR", cmd_detect_mc},
  };
  for (const auto& c : commands) add_common(app.add_subcommand(c.name, c.help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  for (const auto& c : commands) {
    if (!app.got_subcommand(c.name)) continue;
    try {
      RunContext ctx;
      ctx.config = load_config(config_path);
      if (seed >= 0) {
        ctx.config.seed = static_cast<std::uint64_t>(seed);
        ctx.config.solver.seed = ctx.config.seed;
      }
      ctx.out_dir = out_dir;
      ctx.threads = threads;
      ctx.log = &std::cerr;
      return c.run(ctx);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kConfigError;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return kConfigError;
}
