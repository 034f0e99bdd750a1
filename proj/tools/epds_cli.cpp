#include "epds/cli_commands.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

// EPDS_LOG=error|info|debug; logs go to stderr so stdout stays machine-readable.
void setup_logging() {
  auto logger = spdlog::stderr_color_mt("epds");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("EPDS_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Extended projected dynamical systems: simulation and verification"};
  app.require_subcommand(1);

  epds::cli::RunArgs run;
  double h = 0.0;
  double horizon = 0.0;
  auto* run_cmd = app.add_subcommand("run", "Integrate a scenario and write trace.csv and summary.json");
  run_cmd->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
  run_cmd->add_option("file", run.scenario, "Scenario JSON")->required();
  run_cmd->add_option("--out", run.out_dir, "Output directory")->required();
  auto* h_opt = run_cmd->add_option("--h", h, "Step size (overrides the scenario)");
  auto* t_opt = run_cmd->add_option("--T", horizon, "Horizon (overrides the scenario)");

  int count = 10000;
  std::uint64_t seed = 1;
  int max_dim = 6;
  auto* vp = app.add_subcommand("verify-projection", "Solver vs. brute-force oracle on random instances");
  vp->add_option("--count", count, "Feasible instances to check")->check(CLI::PositiveNumber);
  vp->add_option("--seed", seed, "Random seed");
  vp->add_option("--max-dim", max_dim, "Largest ambient dimension")->check(CLI::PositiveNumber);

  int k_count = 1000;
  std::uint64_t k_seed = 1;
  auto* vk = app.add_subcommand("verify-krasovskii", "Krasovskii hull vs. projection on random points");
  vk->add_option("--count", k_count, "Instances per family")->check(CLI::PositiveNumber);
  vk->add_option("--seed", k_seed, "Random seed");

  std::string sweep_file;
  std::vector<double> h_list;
  auto* sw = app.add_subcommand("sweep", "Rerun a scenario for several step sizes");
  sw->add_option("file", sweep_file, "Scenario JSON")->required();
  sw->add_option("--h-list", h_list, "Decreasing step sizes, comma separated")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : epds::cli::kExitInvalid;
  }

  if (*run_cmd) {
    if (*h_opt) run.h = h;
    if (*t_opt) run.horizon = horizon;
    return epds::cli::cmd_run(run, std::cout, std::cerr);
  }
  if (*vp) {
    return epds::cli::cmd_verify_projection(count, seed, max_dim, std::cout, std::cerr);
  }
  if (*vk) {
    return epds::cli::cmd_verify_krasovskii(k_count, k_seed, std::cout, std::cerr);
  }
  return epds::cli::cmd_sweep(sweep_file, h_list, std::cout, std::cerr);
}
