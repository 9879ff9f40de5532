#include "wdpg/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "wdpg/errors.hpp"

namespace wdpg {

std::string_view to_string(StartMode mode) { return mode == StartMode::Real ? "real" : "ergodic"; }

StartMode parse_start_mode(std::string_view text) {
  if (text == "real") return StartMode::Real;
  if (text == "ergodic") return StartMode::Ergodic;
  throw ConfigError("unknown start_state mode '" + std::string(text) + "' (expected real or ergodic)");
}

void TrainConfig::validate() const {
  if (iterations < 1) throw ConfigError("train.iterations must be >= 1");
  if (!(step_exponent > 0.0 && step_exponent < 1.0)) throw ConfigError("train.step_exponent must lie in (0, 1)");
  if (!(step_scale > 0.0) || !std::isfinite(step_scale)) throw ConfigError("train.step_scale must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("train.gamma must lie in (0, 1)");
  if (eval_every < 1) throw ConfigError("train.eval_every must be >= 1");
  if (episode_len < 1) throw ConfigError("train.episode_len must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
}

double step_size(std::int64_t k, double b, double c) {
  require(k >= 1, "step_size: the schedule starts at k = 1");
  return c * std::pow(static_cast<double>(k), -b);
}

TrainResult train(const Environment& env, const GaussianPolicy& initial, const TrainConfig& config,
                  const IterateObserver& observer) {
  config.validate();
  validate_discount(config.gamma);
  const EstimatorOptions options{config.gamma, config.common_random_numbers};

  Rng rng(derive_seed(config.seed, stream_tag::kTrain));
  TrainResult result;
  result.history.reserve(static_cast<std::size_t>(config.iterations));
  Vector theta = initial.theta();
  EnvState real_state = env.reset(rng);
  std::int64_t episode_steps = 0;
  std::int64_t cumulative = 0;

  for (std::int64_t k = 1; k <= config.iterations; ++k) {
    const GaussianPolicy policy = initial.with_theta(theta);
    IterateRecord rec;
    rec.k = k;
    rec.theta = theta;

    if (episode_steps == config.episode_len) {
      real_state = env.reset(rng);
      episode_steps = 0;
    }
    real_state = env.step(real_state, policy.sample(real_state, rng)).next;
    ++episode_steps;
    rec.real_transitions = 1;

    EnvState x0 = real_state;
    if (config.start_state == StartMode::Ergodic) {
      const ErgodicDraw draw = ergodic_draw(env, policy, env.reset(rng), config.gamma, rng);
      x0 = draw.state;
      rec.real_transitions += draw.steps;
    }

    rec.grad = Vector::Zero(theta.size());
    rec.estimates.reserve(static_cast<std::size_t>(config.batch_size));
    for (std::int64_t b = 0; b < config.batch_size; ++b) {
      GradientEstimate est = estimate_gradient(config.estimator, env, policy, x0, rng, options);
      rec.grad += est.vector;
      rec.phantom_transitions += est.transitions;
      rec.estimates.push_back(std::move(est));
    }
    if (config.batch_size > 1) rec.grad /= static_cast<double>(config.batch_size);

    rec.step = step_size(k, config.step_exponent, config.step_scale);
    cumulative += rec.phantom_transitions + rec.real_transitions;
    rec.cumulative_transitions = cumulative;

    Vector next = theta + rec.step * rec.grad;
    const bool finite = next.allFinite();
    result.history.push_back(std::move(rec));
    if (!finite) {
      std::ostringstream msg;
      msg << "non-finite parameter after iteration " << k << " (step " << result.history.back().step
          << ", gradient norm " << result.history.back().grad.norm() << ")";
      result.diverged = true;
      result.diagnostic = msg.str();
      break;
    }
    if (observer) observer(result.history.back(), next);
    theta = std::move(next);
  }
  result.final_theta = theta;
  return result;
}

}  // namespace wdpg
