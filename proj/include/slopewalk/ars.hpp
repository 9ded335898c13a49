#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "slopewalk/common.hpp"

namespace slopewalk {

struct ArsHyperparams {
  double step_size = 0.05;  // beta
  double noise = 0.04;      // nu
  int num_directions = 16;  // N
  int top_directions = 8;   // b
  int workers = 1;
  std::uint64_t master_seed = 0;

  void validate() const {
    if (!(step_size > 0.0) || !(noise > 0.0)) throw ConfigError("ARS step size and noise must be positive");
    if (num_directions < 2 || num_directions % 2 != 0) throw ConfigError("ARS direction count must be even and >= 2");
    if (top_directions < 1 || top_directions > num_directions)
      throw ConfigError("ARS top direction count must lie in [1, N]");
    if (workers < 1) throw ConfigError("worker count must be positive");
  }
};

struct DirectionReturns {
  double plus = 0.0;   // R(theta + nu * delta)
  double minus = 0.0;  // R(theta - nu * delta)
};

struct ArsUpdate {
  Eigen::VectorXd theta;
  double sigma_r = 0.0;
  bool degenerate = false;  // returns had no spread; theta left unchanged
  std::vector<int> kept;    // direction indices, best first
};

/// One V-1t step: rank directions by max(R+, R-), keep the best `top`, and
/// move along the return-difference weighted directions scaled by the
/// standard deviation of the kept returns.
inline ArsUpdate ars_update(const Eigen::VectorXd& theta, const std::vector<Eigen::VectorXd>& deltas,
                            const std::vector<DirectionReturns>& returns, double step_size, int top) {
  if (deltas.size() != returns.size() || deltas.empty())
    throw std::invalid_argument("ars_update needs one return pair per direction");
  top = std::clamp(top, 1, static_cast<int>(deltas.size()));

  std::vector<int> order(deltas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::max(returns[a].plus, returns[a].minus) > std::max(returns[b].plus, returns[b].minus);
  });
  order.resize(top);

  double mean = 0.0;
  for (int k : order) mean += returns[k].plus + returns[k].minus;
  mean /= 2.0 * top;
  double var = 0.0;
  for (int k : order) {
    var += (returns[k].plus - mean) * (returns[k].plus - mean);
    var += (returns[k].minus - mean) * (returns[k].minus - mean);
  }
  const double sigma = std::sqrt(var / (2.0 * top));

  ArsUpdate out{theta, sigma, false, order};
  if (!(sigma >= 1e-12)) {
    out.degenerate = true;
    return out;
  }
  Eigen::VectorXd step = Eigen::VectorXd::Zero(theta.size());
  for (int k : order) step += (returns[k].plus - returns[k].minus) * deltas[k];
  out.theta = theta + (step_size / (top * sigma)) * step;
  return out;
}

/// Runs `task(i)` for i in [0, n) on up to `workers` threads. Results must be
/// written to per-index slots; the first exception is rethrown.
template <class Task>
void parallel_for(std::size_t n, int workers, Task&& task) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

/// Standard normal directions for one iteration, drawn from a stream that
/// depends only on (master_seed, iteration).
inline std::vector<Eigen::VectorXd> sample_directions(std::uint64_t master_seed, long iteration, int count,
                                                      Eigen::Index dim) {
  Rng rng(derive_seed({master_seed, static_cast<std::uint64_t>(iteration), 0xd1ec7105ULL}));
  std::vector<Eigen::VectorXd> out(count, Eigen::VectorXd(dim));
  for (auto& d : out)
    for (Eigen::Index i = 0; i < dim; ++i) d(i) = rng.normal();
  return out;
}

/// Seed of the episode evaluating direction `k` with sign +1/-1.
inline std::uint64_t direction_seed(std::uint64_t master_seed, long iteration, int k, int sign) {
  return derive_seed({master_seed, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(k),
                      sign > 0 ? 1ULL : 2ULL});
}

struct ArsIterationReport {
  ArsUpdate update;
  std::vector<Eigen::VectorXd> deltas;
  std::vector<DirectionReturns> returns;
  int episodes = 0;
};

/// Evaluates all 2N perturbations of `theta` and applies the update.
/// `objective(params, seed)` must be safe to call concurrently; the result
/// does not depend on the worker count or completion order.
template <class Objective>
ArsIterationReport ars_iteration(const Eigen::VectorXd& theta, const ArsHyperparams& hp, long iteration,
                                 Objective&& objective) {
  hp.validate();
  ArsIterationReport rep;
  rep.deltas = sample_directions(hp.master_seed, iteration, hp.num_directions, theta.size());
  rep.returns.assign(hp.num_directions, {});
  const std::size_t jobs = 2 * static_cast<std::size_t>(hp.num_directions);
  parallel_for(jobs, hp.workers, [&](std::size_t job) {
    const int k = static_cast<int>(job / 2);
    const int sign = job % 2 == 0 ? 1 : -1;
    const Eigen::VectorXd params = theta + (sign * hp.noise) * rep.deltas[k];
    const double r = objective(params, direction_seed(hp.master_seed, iteration, k, sign));
    (sign > 0 ? rep.returns[k].plus : rep.returns[k].minus) = r;
  });
  rep.episodes = static_cast<int>(jobs);
  rep.update = ars_update(theta, rep.deltas, rep.returns, hp.step_size, hp.top_directions);
  return rep;
}

}  // namespace slopewalk
