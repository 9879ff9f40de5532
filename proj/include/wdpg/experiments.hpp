#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wdpg/config.hpp"

namespace wdpg {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitGateFailed = 1, kExitUsage = 2 };

struct CommandOutcome {
  bool gates_passed = true;
  std::vector<std::filesystem::path> files;  // relative to the output directory
};

/// Each command writes into config.out. Callers normally go through
/// run_command, which also writes manifest.json.
CommandOutcome cmd_train(const ExperimentConfig& config);
CommandOutcome cmd_compare(const ExperimentConfig& config);
CommandOutcome cmd_eval(const ExperimentConfig& config);
CommandOutcome cmd_gradcheck(const ExperimentConfig& config);
CommandOutcome cmd_variance(const ExperimentConfig& config);
CommandOutcome cmd_complexity(const ExperimentConfig& config);

const std::vector<std::string>& command_names();

/// Checks the output directory is writable, runs the command, and always
/// writes manifest.json (with an "error" field on failure). Returns an ExitCode.
int run_command(std::string_view command, const ExperimentConfig& config);

/// Seed of training run `run` under a master seed.
std::uint64_t run_seed(std::uint64_t master, std::int64_t run);
std::uint64_t eval_seed(std::uint64_t master, std::int64_t run);

/// Shortest round-trip decimal form; used for every number written to disk.
std::string format_number(double value);

}  // namespace wdpg
