// wdpg: command-line front end for training and verification experiments.

#include <CLI11.hpp>
#include <iostream>

#include "wdpg/errors.hpp"
#include "wdpg/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Weak-derivative policy gradient experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int workers = 0;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"train", "train a policy and write history.csv"},
      {"compare", "matched-seed WD vs SF training, writes compare.csv"},
      {"eval", "evaluate the initial policy's discounted return"},
      {"gradcheck", "check both gradient estimators against a finite-difference oracle"},
      {"variance", "compare estimator variances with a paired bootstrap"},
      {"complexity", "measure phantom transitions per iteration"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides config)");
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--workers", workers, "worker threads (overrides config)")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? wdpg::kExitOk : wdpg::kExitUsage;
  }

  wdpg::ExperimentConfig config;
  try {
    config = wdpg::load_config(config_path);
    if (app.get_subcommands().front()->count("--seed")) config.seed = seed;
    if (!out_dir.empty()) config.out = out_dir;
    if (workers > 0) config.workers = workers;
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return wdpg::kExitUsage;
  }
  return wdpg::run_command(app.get_subcommands().front()->get_name(), config);
}
