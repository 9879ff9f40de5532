#include "wdpg/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wdpg/errors.hpp"

namespace wdpg {

namespace {
constexpr double kPi = std::numbers::pi;

bool all_finite(const EnvState& s) { return s.coords.allFinite(); }
}  // namespace

void validate_discount(double gamma) {
  require(gamma > 0.0 && gamma < 1.0, "discount must lie strictly inside (0, 1)");
}

StepResult Environment::step(const EnvState& state, double action) const {
  if (!std::isfinite(action) || !all_finite(state)) {
    throw NumericError(name() + ": non-finite action or state");
  }
  StepResult out = do_step(state, action);
  const double bound = spec().reward_bound;
  if (!std::isfinite(out.reward) || std::abs(out.reward) > bound) {
    std::ostringstream msg;
    msg << name() << ": reward " << out.reward << " exceeds bound " << bound;
    throw NumericError(msg.str());
  }
  return out;
}

// --- pendulum ---------------------------------------------------------------

void PendulumParams::validate() const {
  const bool ok = gravity > 0 && mass > 0 && length > 0 && dt > 0 && max_torque > 0 &&
                  max_speed > 0 && std::isfinite(gravity + mass + length + dt + max_torque + max_speed);
  if (!ok) throw ConfigError("pendulum parameters must be finite and strictly positive");
}

double PendulumParams::reward_bound() const {
  return kPi * kPi + 0.1 * max_speed * max_speed + 0.001 * max_torque * max_torque;
}

double wrap_angle(double angle) {
  double w = angle - 2.0 * kPi * std::floor((angle + kPi) / (2.0 * kPi));
  // floor rounding can land exactly on +pi for inputs just below it
  if (w >= kPi) w -= 2.0 * kPi;
  if (w < -kPi) w = -kPi;
  return w;
}

double pendulum_reward(double angle, double ang_vel, double torque, const PendulumParams& params) {
  if (!(angle >= -kPi && angle <= kPi) || !(std::abs(ang_vel) <= params.max_speed) ||
      !(std::abs(torque) <= params.max_torque)) {
    std::ostringstream msg;
    msg << "pendulum_reward: out of range input (angle=" << angle << ", ang_vel=" << ang_vel
        << ", torque=" << torque << ")";
    throw PreconditionError(msg.str());
  }
  return -(angle * angle + 0.1 * ang_vel * ang_vel + 0.001 * torque * torque);
}

StepResult pendulum_step(const EnvState& state, double torque, const PendulumParams& params) {
  if (state.dim() != 2) throw PreconditionError("pendulum state must be (angle, angular velocity)");
  if (!std::isfinite(torque) || !all_finite(state)) throw NumericError("pendulum_step: non-finite input");
  const double angle = state[0];
  const double vel = state[1];
  const double reward = pendulum_reward(angle, vel, torque, params);

  const double g = params.gravity, m = params.mass, l = params.length, dt = params.dt;
  double new_vel = vel + (3.0 * g / (2.0 * l)) * std::sin(angle) * dt + (3.0 / (m * l * l)) * torque * dt;
  new_vel = std::clamp(new_vel, -params.max_speed, params.max_speed);
  const double new_angle = wrap_angle(angle + new_vel * dt);
  return {EnvState{new_angle, new_vel}, reward};
}

EnvState pendulum_reset(Rng& rng) {
  const double angle = rng.uniform(-kPi, kPi);
  const double vel = rng.uniform(-1.0, 1.0);
  return EnvState{angle, vel};
}

PendulumEnv::PendulumEnv(PendulumParams params) : params_(params) { params_.validate(); }

EnvSpec PendulumEnv::spec() const { return {2, 1, params_.reward_bound()}; }

EnvState PendulumEnv::reset(Rng& rng) const { return pendulum_reset(rng); }

double PendulumEnv::squash(double action) const { return params_.max_torque * std::tanh(action); }

StepResult PendulumEnv::do_step(const EnvState& state, double action) const {
  return pendulum_step(state, squash(action), params_);
}

// --- analytic environments --------------------------------------------------

double bandit_reward(double action) {
  const double d = action - 1.0;
  return std::exp(-d * d);
}

StepResult BanditEnv::do_step(const EnvState& state, double action) const {
  return {state, bandit_reward(action)};
}

StepResult ConstRewardEnv::do_step(const EnvState& state, double) const { return {state, 1.0}; }

StepResult ChainEnv::do_step(const EnvState&, double) const { return {EnvState{1.0}, 1.0}; }

std::shared_ptr<const Environment> make_environment(std::string_view name,
                                                    const PendulumParams& pendulum) {
  if (name == "pendulum") return std::make_shared<PendulumEnv>(pendulum);
  if (name == "bandit") return std::make_shared<BanditEnv>();
  if (name == "const") return std::make_shared<ConstRewardEnv>();
  if (name == "chain") return std::make_shared<ChainEnv>();
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

}  // namespace wdpg
