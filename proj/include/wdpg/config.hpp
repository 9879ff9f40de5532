#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "wdpg/env.hpp"
#include "wdpg/optimizer.hpp"
#include "wdpg/policy.hpp"

namespace wdpg {

struct EnvConfig {
  std::string name = "pendulum";
  PendulumParams pendulum;
  bool operator==(const EnvConfig&) const = default;
};

struct PolicyConfig {
  std::string features = "pendulum";
  double sigma = 1.0;
  std::vector<double> theta0;  // empty: zeros of the feature dimension
  bool operator==(const PolicyConfig&) const = default;
};

struct AnalysisConfig {
  std::int64_t n_traj = 50;            // trajectories per evaluation
  std::int64_t truncation_T = 500;     // evaluation horizon (inclusive)
  std::int64_t seeds = 1;              // independent training runs
  std::int64_t variance_n = 100000;
  std::int64_t bootstrap = 1000;
  double fd_h = 1e-2;
  std::int64_t fd_n_eval = 1000000;
  std::int64_t gradcheck_n = 1000000;
  std::int64_t complexity_iterations = 10000;
  std::vector<std::vector<double>> thetas;  // check points; empty: policy.theta0
  bool operator==(const AnalysisConfig&) const = default;
};

struct ExperimentConfig {
  EnvConfig env;
  PolicyConfig policy;
  TrainConfig train;  // train.seed is derived per run from `seed`
  AnalysisConfig analysis;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out = "out";

  /// Throws ConfigError naming the offending field.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

nlohmann::json to_json(const ExperimentConfig& config);

/// Strict: unknown keys and wrong types are ConfigErrors that name the field.
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Parses config text; syntax errors report line and column.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::shared_ptr<const Environment> build_environment(const ExperimentConfig& config);
GaussianPolicy build_policy(const ExperimentConfig& config, const Environment& env);

}  // namespace wdpg
