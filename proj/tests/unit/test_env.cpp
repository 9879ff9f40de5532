#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wdpg/env.hpp"
#include "wdpg/errors.hpp"

using namespace wdpg;
constexpr double kPi = std::numbers::pi;

TEST_SUITE("env") {
  TEST_CASE("pendulum reward at known points") {
    CHECK(pendulum_reward(0.0, 0.0, 0.0) == 0.0);
    CHECK(pendulum_reward(kPi, 8.0, 2.0) == doctest::Approx(-16.2736044).epsilon(1e-9));
    CHECK(std::abs(pendulum_reward(kPi, 8.0, 2.0) + 16.2736044) < 5e-8);
    CHECK(pendulum_reward(kPi / 2, 0.0, 0.0) == doctest::Approx(-2.4674011).epsilon(1e-8));
    CHECK(PendulumParams{}.reward_bound() == doctest::Approx(16.2736044).epsilon(1e-9));
  }

  TEST_CASE("pendulum reward rejects out-of-range input") {
    CHECK_THROWS_AS(pendulum_reward(3.5, 0.0, 0.0), PreconditionError);
    CHECK_THROWS_AS(pendulum_reward(0.0, 8.5, 0.0), PreconditionError);
    CHECK_THROWS_AS(pendulum_reward(0.0, 0.0, -2.01), PreconditionError);
    CHECK_THROWS_AS(pendulum_reward(std::nan(""), 0.0, 0.0), PreconditionError);
  }

  TEST_CASE("pendulum step examples") {
    SUBCASE("upright equilibrium is a fixed point") {
      const StepResult r = pendulum_step(EnvState{0.0, 0.0}, 0.0);
      CHECK(r.next == EnvState{0.0, 0.0});
      CHECK(r.reward == 0.0);
    }
    SUBCASE("hanging down at rest") {
      const StepResult r = pendulum_step(EnvState{kPi, 0.0}, 0.0);
      CHECK(std::abs(r.next[1]) <= 1e-12);
      CHECK(std::abs(std::abs(r.next[0]) - kPi) <= 1e-12);
      CHECK(r.reward == doctest::Approx(-kPi * kPi));
    }
    SUBCASE("horizontal with full torque") {
      const StepResult r = pendulum_step(EnvState{kPi / 2, 0.0}, 2.0);
      CHECK(r.next[1] == doctest::Approx(1.05).epsilon(1e-14));
      CHECK(r.next[0] == doctest::Approx(kPi / 2 + 0.0525).epsilon(1e-14));
    }
    SUBCASE("speed is clamped") {
      const StepResult r = pendulum_step(EnvState{kPi / 2, 7.9}, 2.0);
      CHECK(r.next[1] == 8.0);
    }
    SUBCASE("non-finite torque") {
      CHECK_THROWS_AS(pendulum_step(EnvState{0.0, 0.0}, std::nan("")), NumericError);
    }
  }

  TEST_CASE("wrap_angle is idempotent and lands in [-pi, pi]") {
    Rng rng(11);
    for (int i = 0; i < 20000; ++i) {
      const double x = rng.uniform(-100.0, 100.0);
      const double w = wrap_angle(x);
      CHECK(w >= -kPi);
      CHECK(w <= kPi);
      CHECK(wrap_angle(w) == w);
      CHECK(std::abs(std::remainder(x - w, 2.0 * kPi)) < 1e-9);
    }
    CHECK(wrap_angle(kPi) == doctest::Approx(-kPi));
    CHECK(wrap_angle(std::nextafter(kPi, 0.0)) < kPi);
  }

  TEST_CASE("pendulum reset distribution") {
    Rng a(5), b(5);
    for (int i = 0; i < 10; ++i) CHECK(pendulum_reset(a) == pendulum_reset(b));

    Rng rng(99);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const EnvState s = pendulum_reset(rng);
      REQUIRE(s[0] >= -kPi);
      REQUIRE(s[0] <= kPi);
      REQUIRE(std::abs(s[1]) <= 1.0);
      sum += s[0];
    }
    CHECK(std::abs(sum / n) < 0.03);
  }

  TEST_CASE("pendulum env squashes raw actions and respects the reward bound") {
    PendulumEnv env;
    CHECK(env.squash(0.0) == 0.0);
    CHECK(env.squash(100.0) == doctest::Approx(2.0));
    Rng rng(3);
    const double M = env.spec().reward_bound;
    for (int ep = 0; ep < 50; ++ep) {
      EnvState s = env.reset(rng);
      for (int t = 0; t < 200; ++t) {
        const StepResult r = env.step(s, 5.0 * rng.normal());
        REQUIRE(r.reward <= 0.0);
        REQUIRE(r.reward >= -M);
        REQUIRE(std::abs(r.next[1]) <= 8.0);
        s = r.next;
      }
    }
  }

  TEST_CASE("identical seeds and actions give identical trajectories") {
    PendulumEnv env;
    auto run = [&](std::uint64_t seed) {
      Rng rng(seed);
      EnvState s = env.reset(rng);
      std::vector<double> trace;
      for (int t = 0; t < 300; ++t) {
        const StepResult r = env.step(s, std::sin(0.1 * t));
        trace.push_back(r.reward);
        trace.push_back(r.next[0]);
        trace.push_back(r.next[1]);
        s = r.next;
      }
      return trace;
    };
    CHECK(run(17) == run(17));
  }

  TEST_CASE("analytic environments") {
    BanditEnv bandit;
    CHECK(bandit.step(EnvState{0.0}, 1.0).reward == 1.0);
    CHECK(bandit.step(EnvState{0.0}, 0.0).reward == doctest::Approx(0.3678794).epsilon(1e-7));
    CHECK(bandit.step(EnvState{0.0}, 0.3).next == EnvState{0.0});

    ConstRewardEnv flat;
    CHECK(flat.step(EnvState{0.0}, -42.0).reward == 1.0);
    CHECK(flat.step(EnvState{0.0}, 1e6).reward == 1.0);

    ChainEnv chain;
    CHECK(chain.step(EnvState{0.0}, 0.0).next == EnvState{1.0});
    CHECK(chain.step(EnvState{1.0}, 0.0).next == EnvState{1.0});
  }

  TEST_CASE("factory and discount validation") {
    CHECK(make_environment("pendulum")->name() == "pendulum");
    CHECK(make_environment("bandit")->single_state());
    CHECK_THROWS_AS(make_environment("cartpole"), ConfigError);
    CHECK_THROWS_AS(PendulumEnv(PendulumParams{.dt = 0.0}), ConfigError);
    CHECK_NOTHROW(validate_discount(0.97));
    CHECK_THROWS_AS(validate_discount(1.0), PreconditionError);
    CHECK_THROWS_AS(validate_discount(0.0), PreconditionError);
  }
}
