#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "wdpg/estimator.hpp"

namespace wdpg {

enum class StartMode {
  Real,     // phantom rollouts start at the current state of the real trajectory
  Ergodic,  // phantom rollouts start at a fresh discounted-occupancy draw
};

std::string_view to_string(StartMode mode);
StartMode parse_start_mode(std::string_view text);

struct TrainConfig {
  std::int64_t iterations = 1000;
  double step_exponent = 0.5;  // b in c * k^-b
  double step_scale = 1.0;     // c
  double gamma = 0.97;
  EstimatorKind estimator = EstimatorKind::WD;
  std::uint64_t seed = 0;
  std::int64_t eval_every = 10;
  StartMode start_state = StartMode::Real;
  std::int64_t episode_len = 200;
  std::int64_t batch_size = 1;
  bool common_random_numbers = false;

  /// Throws ConfigError on any out-of-range field.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// c * k^-b for k >= 1.
double step_size(std::int64_t k, double b, double c);

struct IterateRecord {
  std::int64_t k = 0;     // 1-based iteration index
  Vector theta;           // parameter the gradient was taken at
  Vector grad;            // mean of `estimates`
  std::vector<GradientEstimate> estimates;
  double step = 0.0;
  std::int64_t phantom_transitions = 0;  // this iteration only
  std::int64_t real_transitions = 0;     // real-trajectory and ergodic-draw steps, this iteration
  std::int64_t cumulative_transitions = 0;
};

struct TrainResult {
  std::vector<IterateRecord> history;
  Vector final_theta;
  bool diverged = false;
  std::string diagnostic;
};

/// Called after each update with the record and the new parameter.
using IterateObserver = std::function<void(const IterateRecord&, const Vector& theta_next)>;

/// Stochastic gradient ascent theta_{k+1} = theta_k + step_size(k) * grad_k.
/// A non-finite update stops the run with diverged = true; the last record
/// is kept and final_theta stays at the last finite value.
TrainResult train(const Environment& env, const GaussianPolicy& initial, const TrainConfig& config,
                  const IterateObserver& observer = {});

}  // namespace wdpg
