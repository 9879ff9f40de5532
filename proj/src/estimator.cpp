#include "wdpg/estimator.hpp"

#include <cmath>
#include <limits>

#include "wdpg/errors.hpp"

namespace wdpg {

std::string_view to_string(EstimatorKind kind) { return kind == EstimatorKind::WD ? "WD" : "SF"; }

EstimatorKind parse_estimator_kind(std::string_view text) {
  if (text == "WD" || text == "wd" || text == "pgjd") return EstimatorKind::WD;
  if (text == "SF" || text == "sf" || text == "pgsf") return EstimatorKind::SF;
  throw ConfigError("unknown estimator kind '" + std::string(text) + "' (expected WD or SF)");
}

std::int64_t sample_horizon(double gamma, Rng& rng) {
  validate_discount(gamma);
  const double t = std::floor(std::log(rng.uniform_open()) / std::log(gamma));
  if (t >= static_cast<double>(std::numeric_limits<std::int64_t>::max() / 2)) {
    throw NumericError("sampled horizon overflows");
  }
  return static_cast<std::int64_t>(t);
}

RolloutResult rollout_return(const Environment& env, const EnvState& initial_state,
                             double initial_action, const GaussianPolicy& continuation,
                             std::int64_t horizon, Rng& rng) {
  require(horizon >= 0, "rollout horizon must be non-negative");
  RolloutResult out;
  out.horizon = horizon;
  EnvState state = initial_state;
  double action = initial_action;
  for (std::int64_t t = 0;; ++t) {
    StepResult step = env.step(state, action);
    out.path_reward += step.reward;
    ++out.transitions_used;
    if (t == horizon) break;
    state = std::move(step.next);
    action = continuation.sample(state, rng);
  }
  return out;
}

Vector combine_gradient(const Vector& weight, double return_plus, double return_minus, double gamma) {
  return weight * ((return_plus - return_minus) / (1.0 - gamma));
}

GradientEstimate pgjd_gradient(const Environment& env, const GaussianPolicy& policy,
                               const EnvState& x0, Rng& rng, const EstimatorOptions& options) {
  const std::int64_t horizon = sample_horizon(options.gamma, rng);
  const JordanPair pair = jordan_decompose(policy, x0);
  const double a_plus = pair.sample_positive(rng);
  const double a_minus = pair.sample_negative(rng);

  // Coupled mode replays the plus rollout's continuation noise for the minus rollout.
  std::optional<Rng> replay;
  if (options.common_random_numbers) replay.emplace(rng);
  const RolloutResult plus = rollout_return(env, x0, a_plus, policy, horizon, rng);
  const RolloutResult minus = rollout_return(env, x0, a_minus, policy, horizon, replay ? *replay : rng);

  GradientEstimate est;
  est.kind = EstimatorKind::WD;
  est.horizon = horizon;
  est.weight = pair.g;
  est.return_plus = plus.path_reward;
  est.return_minus = minus.path_reward;
  est.gamma = options.gamma;
  est.transitions = plus.transitions_used + minus.transitions_used;
  est.vector = combine_gradient(est.weight, est.return_plus, est.return_minus, est.gamma);
  return est;
}

GradientEstimate pgsf_gradient_at(const Environment& env, const GaussianPolicy& policy,
                                  const EnvState& x0, double initial_action, std::int64_t horizon,
                                  Rng& rng, double gamma) {
  validate_discount(gamma);
  const RolloutResult rollout = rollout_return(env, x0, initial_action, policy, horizon, rng);
  GradientEstimate est;
  est.kind = EstimatorKind::SF;
  est.horizon = horizon;
  est.weight = policy.score(x0, initial_action);
  est.return_plus = rollout.path_reward;
  est.return_minus = 0.0;
  est.gamma = gamma;
  est.transitions = rollout.transitions_used;
  est.vector = combine_gradient(est.weight, est.return_plus, est.return_minus, gamma);
  return est;
}

GradientEstimate pgsf_gradient(const Environment& env, const GaussianPolicy& policy,
                               const EnvState& x0, Rng& rng, const EstimatorOptions& options) {
  const std::int64_t horizon = sample_horizon(options.gamma, rng);
  const double a0 = policy.sample(x0, rng);
  return pgsf_gradient_at(env, policy, x0, a0, horizon, rng, options.gamma);
}

GradientEstimate estimate_gradient(EstimatorKind kind, const Environment& env,
                                   const GaussianPolicy& policy, const EnvState& x0, Rng& rng,
                                   const EstimatorOptions& options) {
  return kind == EstimatorKind::WD ? pgjd_gradient(env, policy, x0, rng, options)
                                   : pgsf_gradient(env, policy, x0, rng, options);
}

ErgodicDraw ergodic_draw(const Environment& env, const GaussianPolicy& policy,
                         const EnvState& x_init, double gamma, Rng& rng) {
  const std::int64_t stop = sample_horizon(gamma, rng);
  ErgodicDraw out{x_init, 0};
  for (; out.steps < stop; ++out.steps) {
    const double a = policy.sample(out.state, rng);
    out.state = env.step(out.state, a).next;
  }
  return out;
}

// --- batches ----------------------------------------------------------------

Vector GradientBatch::mean() const { return samples.colwise().mean().transpose(); }

Vector GradientBatch::variance() const {
  const std::int64_t n = size();
  if (n < 2) return Vector::Zero(samples.cols());
  const Eigen::RowVectorXd mu = samples.colwise().mean();
  return ((samples.rowwise() - mu).array().square().colwise().sum() / static_cast<double>(n - 1))
      .transpose();
}

Vector GradientBatch::std_error() const {
  return (variance() / static_cast<double>(std::max<std::int64_t>(1, size()))).array().sqrt();
}

namespace {
struct ChunkOut {
  Eigen::MatrixXd rows;
  std::int64_t transitions = 0;
};
}  // namespace

GradientBatch estimate_batch(EstimatorKind kind, const Environment& env,
                             const GaussianPolicy& policy, const StartRule& start, std::int64_t n,
                             const EstimatorOptions& options, const BatchPlan& plan) {
  require(n >= 1, "batch size must be positive");
  const int d = policy.dim();
  auto chunks = run_chunked<ChunkOut>(n, plan, [&](std::int64_t, std::int64_t begin, std::int64_t end, Rng& rng) {
    ChunkOut out;
    out.rows.resize(end - begin, d);
    for (std::int64_t i = begin; i < end; ++i) {
      EnvState x0;
      if (start.fixed) {
        x0 = *start.fixed;
      } else {
        const ErgodicDraw draw = ergodic_draw(env, policy, env.reset(rng), options.gamma, rng);
        x0 = draw.state;
        out.transitions += draw.steps;
      }
      const GradientEstimate est = estimate_gradient(kind, env, policy, x0, rng, options);
      out.rows.row(i - begin) = est.vector.transpose();
      out.transitions += est.transitions;
    }
    return out;
  });

  GradientBatch batch;
  batch.kind = kind;
  batch.samples.resize(n, d);
  std::int64_t row = 0;
  for (const auto& c : chunks) {
    batch.samples.middleRows(row, c.rows.rows()) = c.rows;
    row += c.rows.rows();
    batch.transitions += c.transitions;
  }
  return batch;
}

}  // namespace wdpg
