// Experiment CLI: one subcommand per experiment, CSV + manifest into --out.
#include "riss/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

namespace h = riss::harness;

int main(int argc, char** argv) {
  CLI::App app{"RISS link-level experiments"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "results";
  int trials = 0;
  bool full = false;
  bool quiet = false;

  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  auto* trials_opt = app.add_option("--trials", trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  app.add_flag("--full", full, "N = 256 geometry with coarser grids");
  app.add_flag("-q,--quiet", quiet, "no progress on stderr");

  for (const auto& id : h::experiment_ids()) app.add_subcommand(id, "run " + id);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Bad command lines count as configuration errors.
    return app.exit(e) == 0 ? 0 : 1;
  }
  const std::string id = app.get_subcommands().front()->get_name();

  h::ExperimentResult result;
  h::ScenarioConfig config;
  try {
    config = config_path.empty() ? h::default_config() : h::load_config(config_path);
    if (full) h::apply_full_scale(config);
    if (*seed_opt) config.seed = seed;
    if (*trials_opt) h::set_trials(config, id, trials);
    config.validate();
  } catch (const h::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    result = h::run_experiment(id, config);
    std::filesystem::create_directories(out_dir);
    h::emit_csv(result.rows, std::filesystem::path(out_dir) / (id + ".csv"));
    h::write_manifest(out_dir, id, config);
  } catch (const h::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << id << ": " << e.what() << '\n';
    return 1;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!quiet) {
    std::cerr << id << ": " << result.rows.size() << " rows, " << result.failed_cells << '/'
              << result.cells << " cells failed, " << secs << " s\n";
  }
  if (result.failure_rate() > 0.05) {
    std::cerr << id << ": more than 5% of cells failed\n";
    return 2;
  }
  return 0;
}
