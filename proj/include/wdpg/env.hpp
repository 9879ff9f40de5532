#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>

#include "wdpg/rng.hpp"

namespace wdpg {

using Vector = Eigen::VectorXd;

inline constexpr int kMaxStateDim = 4;
/// Inline storage, no heap allocation per simulator step.
using StateVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxStateDim, 1>;

/// Raw simulator state. The pendulum stores (angle, angular velocity); the
/// analytic environments store a single state index.
struct EnvState {
  StateVector coords;

  EnvState() = default;
  explicit EnvState(const StateVector& c) : coords(c) {}
  EnvState(std::initializer_list<double> values)
      : coords(Eigen::Map<const Eigen::VectorXd>(values.begin(), static_cast<Eigen::Index>(values.size()))) {}

  Eigen::Index dim() const { return coords.size(); }
  double operator[](Eigen::Index i) const { return coords[i]; }
  bool operator==(const EnvState& other) const {
    return coords.size() == other.coords.size() && coords == other.coords;
  }
};

/// Static description of a bounded-reward MDP simulator.
struct EnvSpec {
  int state_dim = 0;
  int action_dim = 1;
  double reward_bound = 1.0;  // sup |r|
};

/// Throws PreconditionError unless gamma lies strictly inside (0, 1).
void validate_discount(double gamma);

struct StepResult {
  EnvState next;
  double reward = 0.0;
};

/// Immutable simulator. All state lives in EnvState values, so one instance
/// may be shared by any number of threads.
///
/// step() takes the raw policy-space action; any squashing to the physical
/// actuator range happens inside the concrete environment. Every emitted
/// reward is checked against EnvSpec::reward_bound.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual EnvSpec spec() const = 0;
  virtual EnvState reset(Rng& rng) const = 0;
  /// True when reset() always returns the same absorbing state.
  virtual bool single_state() const { return false; }

  StepResult step(const EnvState& state, double action) const;

 protected:
  virtual StepResult do_step(const EnvState& state, double action) const = 0;
};

// ---------------------------------------------------------------------------
// Pendulum swing-up

struct PendulumParams {
  double gravity = 10.0;
  double mass = 1.0;
  double length = 1.0;
  double dt = 0.05;
  double max_torque = 2.0;
  double max_speed = 8.0;

  void validate() const;
  /// -(pi^2 + 0.1 max_speed^2 + 0.001 max_torque^2) is the minimum reward.
  double reward_bound() const;

  bool operator==(const PendulumParams&) const = default;
};

/// Maps any finite angle into [-pi, pi).
double wrap_angle(double angle);

double pendulum_reward(double angle, double ang_vel, double torque,
                       const PendulumParams& params = {});

/// Semi-implicit Euler step with an already clipped torque. The reward is
/// evaluated on the pre-transition state.
StepResult pendulum_step(const EnvState& state, double torque,
                         const PendulumParams& params = {});

/// angle ~ U[-pi, pi], angular velocity ~ U[-1, 1].
EnvState pendulum_reset(Rng& rng);

class PendulumEnv final : public Environment {
 public:
  explicit PendulumEnv(PendulumParams params = {});

  std::string name() const override { return "pendulum"; }
  EnvSpec spec() const override;
  EnvState reset(Rng& rng) const override;

  const PendulumParams& params() const { return params_; }
  /// Raw action a becomes torque max_torque * tanh(a).
  double squash(double action) const;

 protected:
  StepResult do_step(const EnvState& state, double action) const override;

 private:
  PendulumParams params_;
};

// ---------------------------------------------------------------------------
// Analytic verification environments

double bandit_reward(double action);

/// Single absorbing state, r(a) = exp(-(a - 1)^2).
class BanditEnv final : public Environment {
 public:
  std::string name() const override { return "bandit"; }
  EnvSpec spec() const override { return {1, 1, 1.0}; }
  EnvState reset(Rng&) const override { return EnvState{0.0}; }
  bool single_state() const override { return true; }

 protected:
  StepResult do_step(const EnvState& state, double action) const override;
};

/// Single absorbing state, r = 1 for every action.
class ConstRewardEnv final : public Environment {
 public:
  std::string name() const override { return "const"; }
  EnvSpec spec() const override { return {1, 1, 1.0}; }
  EnvState reset(Rng&) const override { return EnvState{0.0}; }
  bool single_state() const override { return true; }

 protected:
  StepResult do_step(const EnvState& state, double action) const override;
};

/// Deterministic two-state chain s0 -> s1 -> s1 with unit reward.
class ChainEnv final : public Environment {
 public:
  std::string name() const override { return "chain"; }
  EnvSpec spec() const override { return {1, 1, 1.0}; }
  EnvState reset(Rng&) const override { return EnvState{0.0}; }

 protected:
  StepResult do_step(const EnvState& state, double action) const override;
};

/// Names: "pendulum", "bandit", "const", "chain". Throws ConfigError otherwise.
std::shared_ptr<const Environment> make_environment(std::string_view name,
                                                    const PendulumParams& pendulum = {});

}  // namespace wdpg
