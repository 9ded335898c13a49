#include <gtest/gtest.h>

#include "slopewalk/simenv.hpp"

using namespace slopewalk;

namespace {

EnvConfig quiet_config() {
  EnvConfig cfg;
  cfg.randomization = RandomizationConfig::none();
  return cfg;
}

ActionVector uniform_action(double step_len) {
  ActionVector a{};
  for (auto& l : a) l.step_len = step_len;
  return a;
}

}  // namespace

TEST(Terrain, NormalConvention) {
  const Vec3 up = TerrainPlane{9, 0}.normal();
  EXPECT_NEAR(tilt_pitch(up), deg2rad(9), 1e-12);
  EXPECT_NEAR(tilt_roll(up), 0.0, 1e-12);
  const Vec3 side = TerrainPlane{9, 90}.normal();
  EXPECT_NEAR(tilt_roll(side), -deg2rad(9), 1e-12);
  EXPECT_NEAR(std::acos(TerrainPlane{11, 45}.normal().z()), deg2rad(11), 1e-12);
}

TEST(Reset, FlatObservationNearZero) {
  LocomotionEnv env(quiet_config());
  const Observation obs = env.reset({0, 0}, 1);
  EXPECT_LT(obs.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Reset, SameSeedSameState) {
  LocomotionEnv a(EnvConfig{}), b(EnvConfig{});
  a.reset({7, 30}, 99);
  b.reset({7, 30}, 99);
  EXPECT_TRUE(bitwise_equal(a.state(), b.state()));
  EXPECT_EQ(a.episode().friction_mu, b.episode().friction_mu);
}

TEST(Reset, SpawnsPlaneAligned) {
  LocomotionEnv env(quiet_config());
  const TerrainPlane t{11, 90};
  const Observation obs = env.reset(t, 1);
  const Vec3 n = t.normal();
  EXPECT_NEAR(obs(6), tilt_roll(n), 1e-12);
  EXPECT_NEAR(obs(7), tilt_pitch(n), 1e-12);
  EXPECT_NEAR(obs(8), 0.0, 1e-12);
  // The slope estimate starts flat.
  EXPECT_EQ(obs(9), 0.0);
  EXPECT_EQ(obs(10), 0.0);
  // Every foot starts on the plane.
  for (const Vec3& p : env.feet_world()) EXPECT_NEAR(n.dot(p), 0.0, 1e-9);
}

TEST(Reset, RandomizationWithinRanges) {
  const EnvConfig cfg;
  LocomotionEnv env(cfg);
  for (std::uint64_t s = 0; s < 200; ++s) {
    env.reset({5, 15}, s);
    const auto& ep = env.episode();
    EXPECT_GE(ep.friction_mu, 0.5);
    EXPECT_LE(ep.friction_mu, 0.8);
    EXPECT_GE(ep.added_mass_front, 0.0);
    EXPECT_LE(ep.added_mass_back, 0.2);
    EXPECT_GE(ep.motor_strength, 5.0);
    EXPECT_LE(ep.motor_strength, 8.0);
    ASSERT_TRUE(ep.push.has_value());
    EXPECT_EQ(ep.push->start_step, 200);
    EXPECT_EQ(ep.push->steps, 10);
  }
}

TEST(Step, RequiresReset) {
  LocomotionEnv env(quiet_config());
  EXPECT_THROW(env.step(uniform_action(0.068)), NotReset);
}

TEST(Step, Deterministic) {
  auto run = [] {
    LocomotionEnv env(EnvConfig{});
    env.reset({9, 45}, 1234);
    std::vector<double> rewards;
    Rng rng(5);
    for (int k = 0; k < 400; ++k) {
      ActionVector a{};
      for (auto& l : a) {
        l.step_len = rng.uniform(0, 0.136);
        l.shift_y = rng.uniform(-0.035, 0.035);
      }
      const auto r = env.step(a);
      rewards.push_back(r.reward);
      if (r.done) break;
    }
    return std::make_pair(rewards, env.state());
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_TRUE(bitwise_equal(a.second, b.second));
}

TEST(Step, PolicyStepEveryHalfCycle) {
  LocomotionEnv env(quiet_config());
  env.reset({0, 0}, 1);
  for (int k = 1; k <= 200; ++k) {
    const auto r = env.step(uniform_action(0.068));
    EXPECT_EQ(r.info.policy_step, k % 40 == 0) << k;
  }
}

TEST(Step, EpisodeEndsAtConfiguredLength) {
  EnvConfig cfg = quiet_config();
  cfg.sim.episode_len = 120;
  LocomotionEnv env(cfg);
  env.reset({0, 0}, 1);
  int k = 0;
  while (!env.step(uniform_action(0.068)).done) ++k;
  EXPECT_EQ(k + 1, 120);
}

TEST(Step, TrotsForwardOnFlatGround) {
  LocomotionEnv env(quiet_config());
  env.reset({0, 0}, 1);
  const double x0 = env.state().position.x();
  for (int k = 0; k < 400; ++k) ASSERT_FALSE(env.step(uniform_action(0.068)).info.fell);
  EXPECT_GT(env.state().position.x() - x0, 0.3);
}

TEST(Step, StandingPenaltyPathway) {
  LocomotionEnv env(quiet_config());
  env.reset({0, 0}, 1);
  bool standing_seen = false;
  for (int k = 1; k <= 120; ++k) {
    const auto r = env.step(uniform_action(0.0));
    if (k < 50) EXPECT_FALSE(r.info.standing);
    standing_seen = standing_seen || r.info.standing;
  }
  EXPECT_TRUE(standing_seen);
}

TEST(Physics, FreeFlightIsBallistic) {
  LocomotionEnv env(quiet_config());
  env.reset({0, 0}, 1);
  SimState s = env.state();
  s.position.z() = 2.0;
  s.velocity = Vec3(0.3, -0.2, 0.1);
  s.omega = Vec3(0.1, 0.2, -0.3);
  env.set_state(s);
  for (int k = 0; k < 20; ++k) {
    const Vec3 v0 = env.state().velocity;
    const auto r = env.step(uniform_action(0.068));
    EXPECT_EQ(r.info.contacts, 0);
    const Vec3 accel = (env.state().velocity - v0) / 0.005;
    EXPECT_LT((accel - Vec3(0, 0, -kGravity)).norm(), 1e-9);
  }
}

TEST(Physics, ContactForcesRespectFriction) {
  LocomotionEnv env(EnvConfig{});
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    env.reset({11, 15.0 * static_cast<double>(seed)}, seed);
    for (int k = 0; k < 400; ++k) {
      const auto r = env.step(uniform_action(0.1));
      EXPECT_LE(r.info.friction_excess, 1e-9);
      EXPECT_GE(r.info.min_normal_force, 0.0);
      if (r.done) break;
    }
  }
}

TEST(Physics, EnergyNonIncreasingAtRest) {
  EnvConfig cfg = quiet_config();
  cfg.sim.gait_clock = false;
  cfg.sim.episode_len = 1400;
  LocomotionEnv env(cfg);
  env.reset({0, 0}, 1);
  const ActionVector zero{};
  for (int k = 0; k < 400; ++k) env.step(zero);
  double prev = env.mechanical_energy();
  double worst_rise = 0.0;
  for (int k = 0; k < 1000; ++k) {
    env.step(zero);
    const double e = env.mechanical_energy();
    worst_rise = std::max(worst_rise, e - prev);
    prev = e;
  }
  EXPECT_LE(worst_rise, 1e-9);
}

TEST(Physics, FallDetectedWithinOneStep) {
  LocomotionEnv env(quiet_config());
  env.reset({0, 0}, 1);
  env.set_external_wrench(Vec3::Zero(), Vec3(60.0, 0.0, 0.0));
  for (int k = 0; k < 400; ++k) {
    const auto r = env.step(uniform_action(0.068));
    const bool crossed = std::abs(r.info.attitude.roll) > deg2rad(45) || std::abs(r.info.attitude.pitch) > deg2rad(45) ||
                         r.info.height < 0.5 * 0.243;
    EXPECT_EQ(r.done, crossed || k + 1 == 400);
    if (r.done) {
      EXPECT_TRUE(r.info.fell);
      return;
    }
  }
  FAIL() << "torque never tipped the torso";
}

TEST(Physics, TippedSixtyDegreesIsFall) {
  LocomotionEnv env(quiet_config());
  env.reset({0, 0}, 1);
  SimState s = env.state();
  s.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(deg2rad(60), Vec3::UnitX()));
  env.set_state(s);
  const auto r = env.step(uniform_action(0.068));
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(r.info.fell);
}

TEST(Push, ScheduleWindowAndDistribution) {
  const RandomizationConfig rc;
  Rng rng(3);
  double sum = 0.0, sumsq = 0.0;
  int positive = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto p = schedule_push(rc, 400, rng);
    ASSERT_TRUE(p.has_value());
    EXPECT_EQ(p->start_step, 200);
    EXPECT_TRUE(p->active_at(200));
    EXPECT_TRUE(p->active_at(209));
    EXPECT_FALSE(p->active_at(210));
    const double m = std::abs(p->force.y());
    EXPECT_GE(m, 60.0);
    EXPECT_LE(m, 120.0);
    EXPECT_EQ(p->force.x(), 0.0);
    sum += m;
    sumsq += m * m;
    positive += p->force.y() > 0;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  EXPECT_NEAR(mean, 90.0, 0.5);
  EXPECT_NEAR(var, 60.0 * 60.0 / 12.0, 10.0);
  EXPECT_NEAR(positive / static_cast<double>(n), 0.5, 0.02);
}

TEST(Push, DisabledNeverApplied) {
  EnvConfig cfg;
  cfg.randomization.push_enabled = false;
  LocomotionEnv env(cfg);
  env.reset({0, 0}, 8);
  EXPECT_FALSE(env.episode().push.has_value());
  for (int k = 0; k < 400; ++k) EXPECT_EQ(env.step(uniform_action(0.068)).info.push_force, 0.0);
}

TEST(Config, RejectsOddCycle) {
  EnvConfig cfg;
  cfg.gait.cycle_period = 0.405;
  EXPECT_THROW(LocomotionEnv{cfg}, ConfigError);
}

TEST(Config, RejectsUnreachableHeight) {
  EnvConfig cfg;
  cfg.gait.desired_height = 0.5;
  EXPECT_THROW(LocomotionEnv{cfg}, ConfigError);
}
