#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "wdpg/env.hpp"
#include "wdpg/parallel.hpp"
#include "wdpg/policy.hpp"

namespace wdpg {

enum class EstimatorKind { WD, SF };

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view text);

/// T ~ Geom(1 - gamma) on {0, 1, 2, ...}, i.e. P(T = t) = (1 - gamma) gamma^t.
std::int64_t sample_horizon(double gamma, Rng& rng);

struct RolloutResult {
  double path_reward = 0.0;  // undiscounted sum of T + 1 rewards
  std::int64_t horizon = 0;
  std::int64_t transitions_used = 0;
};

/// Random-horizon Q estimate. Rewards r(s_t, a_t) are summed for
/// t = 0..horizon inclusive; a_0 is `initial_action` and later actions come
/// from `continuation`. Unbiased for Q(x, a) when horizon ~ Geom(1 - gamma).
RolloutResult rollout_return(const Environment& env, const EnvState& initial_state,
                             double initial_action, const GaussianPolicy& continuation,
                             std::int64_t horizon, Rng& rng);

/// One stochastic gradient sample.
///
/// Both kinds store their ingredients so the vector can be rebuilt exactly:
///   WD: weight = g(theta, x0),    returns = (R_plus, R_minus)
///   SF: weight = score(x0, a0),   returns = (R, 0)
/// and vector = weight * ((return_plus - return_minus) / (1 - gamma)).
struct GradientEstimate {
  Vector vector;
  EstimatorKind kind = EstimatorKind::WD;
  std::int64_t horizon = 0;
  Vector weight;
  double return_plus = 0.0;
  double return_minus = 0.0;
  double gamma = 0.0;
  std::int64_t transitions = 0;  // phantom transitions consumed
};

Vector combine_gradient(const Vector& weight, double return_plus, double return_minus, double gamma);

struct EstimatorOptions {
  double gamma = 0.97;
  /// Drive the continuation actions of both phantom rollouts with the same
  /// normal draws. Off by default.
  bool common_random_numbers = false;
};

/// Weak-derivative estimate: one shared horizon, initial actions from the
/// Rayleigh components at x0, two rollouts continued under the policy.
GradientEstimate pgjd_gradient(const Environment& env, const GaussianPolicy& policy,
                               const EnvState& x0, Rng& rng, const EstimatorOptions& options);

/// Score-function estimate with the same random-horizon Q estimate.
GradientEstimate pgsf_gradient(const Environment& env, const GaussianPolicy& policy,
                               const EnvState& x0, Rng& rng, const EstimatorOptions& options);

/// Score-function estimate with a caller-chosen initial action and horizon.
GradientEstimate pgsf_gradient_at(const Environment& env, const GaussianPolicy& policy,
                                  const EnvState& x0, double initial_action, std::int64_t horizon,
                                  Rng& rng, double gamma);

GradientEstimate estimate_gradient(EstimatorKind kind, const Environment& env,
                                   const GaussianPolicy& policy, const EnvState& x0, Rng& rng,
                                   const EstimatorOptions& options);

struct ErgodicDraw {
  EnvState state;
  std::int64_t steps = 0;
};

/// Exact draw from the discounted occupancy measure: run the real policy for
/// T' ~ Geom(1 - gamma) steps from x_init and stop.
ErgodicDraw ergodic_draw(const Environment& env, const GaussianPolicy& policy,
                         const EnvState& x_init, double gamma, Rng& rng);

inline EnvState ergodic_state(const Environment& env, const GaussianPolicy& policy,
                              const EnvState& x_init, double gamma, Rng& rng) {
  return ergodic_draw(env, policy, x_init, gamma, rng).state;
}

/// Where each estimate in a batch starts.
struct StartRule {
  /// Fixed start state. When empty, each estimate draws x_init from
  /// env.reset() and then an ergodic state from it.
  std::optional<EnvState> fixed;
};

/// n independent estimates stored row-wise (n x d).
struct GradientBatch {
  EstimatorKind kind = EstimatorKind::WD;
  Eigen::MatrixXd samples;
  std::int64_t transitions = 0;

  std::int64_t size() const { return samples.rows(); }
  Vector mean() const;
  /// Unbiased per-coordinate sample variance.
  Vector variance() const;
  Vector std_error() const;
};

GradientBatch estimate_batch(EstimatorKind kind, const Environment& env,
                             const GaussianPolicy& policy, const StartRule& start, std::int64_t n,
                             const EstimatorOptions& options, const BatchPlan& plan);

}  // namespace wdpg
