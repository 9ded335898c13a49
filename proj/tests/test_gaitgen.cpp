#include <gtest/gtest.h>

#include "slopewalk/gaitgen.hpp"

using namespace slopewalk;

namespace {

// Direct transcription of the stance/swing case split.
Vec3 reference_point(double tau, double l, double h, double fc) {
  const double ang = 2.0 * kPi * (1.0 - tau);
  if (tau < 0.5) return {0.5 * l * std::cos(ang), 0.0, -h};
  return {0.5 * l * std::cos(ang), 0.0, -h + fc * std::sin(ang)};
}

LegAction with_step(double l) {
  LegAction a;
  a.step_len = l;
  return a;
}

}  // namespace

TEST(TrotPhase, Offsets) {
  EXPECT_DOUBLE_EQ(trot_phase(0.0, 0.4, Leg::FL), 0.0);
  EXPECT_DOUBLE_EQ(trot_phase(0.0, 0.4, Leg::FR), 0.5);
  EXPECT_DOUBLE_EQ(trot_phase(0.0, 0.4, Leg::BR), 0.0);
  EXPECT_DOUBLE_EQ(trot_phase(0.0, 0.4, Leg::BL), 0.5);
  EXPECT_NEAR(trot_phase(0.6, 0.4, Leg::FL), 0.5, 1e-12);
}

TEST(BaseTrajectory, Examples) {
  const GaitParams gp;
  const Vec3 a = base_trajectory_point(0.0, with_step(0.1), gp);
  EXPECT_NEAR(a.x(), 0.05, 1e-15);
  EXPECT_EQ(a.y(), 0.0);
  EXPECT_EQ(a.z(), -0.243);
  const Vec3 b = base_trajectory_point(0.75, with_step(0.1), gp);
  EXPECT_NEAR(b.x(), 0.0, 1e-15);
  EXPECT_NEAR(b.z(), -0.183, 1e-15);
}

TEST(BaseTrajectory, MatchesFormulaAtSampledPhases) {
  GaitParams gp;
  Rng rng(41);
  for (int i = 0; i < 1000; ++i) {
    const double tau = rng.uniform();
    const double l = rng.uniform(0.0, gp.max_step_len);
    const Vec3 got = base_trajectory_point(tau, with_step(l), gp);
    const Vec3 want = reference_point(tau, l, gp.desired_height, gp.foot_clearance);
    EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BaseTrajectory, ContinuousAtBoundaries) {
  const GaitParams gp;
  const LegAction a = with_step(0.1);
  const Vec3 before = base_trajectory_point(std::nextafter(0.5, 0.0), a, gp);
  const Vec3 after = base_trajectory_point(0.5, a, gp);
  EXPECT_NEAR(before.x(), -0.05, 1e-12);
  EXPECT_LT((before - after).norm(), 1e-12);
  const Vec3 end = base_trajectory_point(std::nextafter(1.0, 0.0), a, gp);
  const Vec3 start = base_trajectory_point(0.0, a, gp);
  EXPECT_LT((end - start).norm(), 1e-12);
}

TEST(BaseTrajectory, StanceFlatSwingBounded) {
  const GaitParams gp;
  const LegAction a = with_step(0.136);
  double xmin = 1e9, xmax = -1e9;
  for (int i = 0; i < 4000; ++i) {
    const double tau = i / 4000.0;
    const Vec3 p = base_trajectory_point(tau, a, gp);
    if (tau < 0.5) {
      EXPECT_EQ(p.z(), -gp.desired_height);
    } else {
      EXPECT_GE(p.z(), -gp.desired_height - 1e-15);
      EXPECT_LE(p.z(), -gp.desired_height + gp.foot_clearance + 1e-15);
    }
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
  }
  EXPECT_NEAR(xmax - xmin, 0.136, 1e-12);
}

TEST(TransformPoint, Examples) {
  const Vec3 pt(0.1, 0, -0.243);
  EXPECT_LT((transform_point(pt, LegAction{}) - pt).norm(), 1e-15);
  LegAction yaw;
  yaw.steer = kPi / 2;
  EXPECT_LT((transform_point(pt, yaw) - Vec3(0, 0.1, -0.243)).norm(), 1e-15);
  LegAction a{0.0, 0.3, -0.02, 0.01, 0.005};
  const Vec3 got = transform_point(Vec3(0.05, 0, -0.243), a);
  EXPECT_NEAR(got.x(), -0.02 + 0.05 * std::cos(0.3), 1e-15);
  EXPECT_NEAR(got.y(), 0.01 + 0.05 * std::sin(0.3), 1e-15);
  EXPECT_NEAR(got.z(), -0.238, 1e-15);
}

TEST(TransformPoint, Affine) {
  Rng rng(43);
  for (int i = 0; i < 500; ++i) {
    const LegAction a{0.0, rng.uniform(-0.35, 0.35), rng.uniform(-0.06, 0.06), rng.uniform(-0.035, 0.035),
                      rng.uniform(-0.06, 0.06)};
    const Vec3 p1(rng.uniform(-0.1, 0.1), 0, rng.uniform(-0.3, -0.2));
    const Vec3 p2(rng.uniform(-0.1, 0.1), 0, rng.uniform(-0.3, -0.2));
    const double al = rng.uniform();
    const Vec3 lhs = transform_point(al * p1 + (1 - al) * p2, a);
    const Vec3 rhs = al * transform_point(p1, a) + (1 - al) * transform_point(p2, a);
    EXPECT_LT((lhs - rhs).norm(), 1e-15);
  }
}

TEST(TransformPoint, CheckedThrowsOutsideWorkspace) {
  const LegGeometry g;
  LegAction a;
  a.shift_z = -0.2;
  EXPECT_THROW(transform_point_checked(Vec3(0, 0, -0.243), a, g), WorkspaceViolation);
  EXPECT_NO_THROW(transform_point_checked(Vec3(0, 0, -0.243), LegAction{}, g));
}

TEST(TransformPoint, NominalGaitInsideWorkspace) {
  const LegGeometry g;
  const GaitParams gp;
  for (double l : {0.0, 0.068, 0.136})
    for (int i = 0; i < 200; ++i) EXPECT_TRUE(in_workspace(foot_reference(i / 200.0, with_step(l), gp), g));
}

TEST(Trot, DiagonalPairsIdentical) {
  const GaitParams gp;
  const LegAction a{0.1, 0.1, 0.01, -0.01, 0.0};
  for (int i = 0; i < 100; ++i) {
    const double t = i * 0.013;
    EXPECT_EQ(foot_reference(trot_phase(t, gp.cycle_period, Leg::FL), a, gp),
              foot_reference(trot_phase(t, gp.cycle_period, Leg::BR), a, gp));
    EXPECT_EQ(foot_reference(trot_phase(t, gp.cycle_period, Leg::FR), a, gp),
              foot_reference(trot_phase(t, gp.cycle_period, Leg::BL), a, gp));
  }
}

TEST(ActionLatch, TakesCommandsOnlyAtBoundaries) {
  ActionLatch latch;
  const long cycle = 80;
  std::array<LegAction, 4> first{}, second{};
  for (auto& a : first) a.step_len = 0.05;
  for (auto& a : second) a.step_len = 0.1;
  auto phases = [&](long k) {
    std::array<long, 4> p{};
    for (Leg leg : kLegs) p[index(leg)] = (k + static_cast<long>(phase_offset(leg) * cycle)) % cycle;
    return p;
  };
  latch.command(first);
  latch.advance(phases(0), cycle);
  for (Leg leg : kLegs) EXPECT_EQ(latch.active(leg).step_len, 0.05);
  latch.command(second);
  latch.advance(phases(7), cycle);
  for (Leg leg : kLegs) EXPECT_EQ(latch.active(leg).step_len, 0.05);
  latch.advance(phases(40), cycle);
  for (Leg leg : kLegs) EXPECT_EQ(latch.active(leg).step_len, 0.1);
}

TEST(GaitParams, Validation) {
  GaitParams gp;
  EXPECT_NO_THROW(gp.validate());
  gp.cycle_period = 0.0;
  EXPECT_THROW(gp.validate(), ConfigError);
}
