#pragma once

#include <functional>
#include <vector>

#include <Eigen/QR>

#include "slopewalk/ars.hpp"
#include "slopewalk/policy.hpp"
#include "slopewalk/simenv.hpp"

namespace slopewalk {

// ---------------------------------------------------------------------------
// Terrain curriculum

inline constexpr std::array<double, 5> kInclinations{0.0, 5.0, 7.0, 9.0, 11.0};
inline constexpr std::array<double, 7> kOrientations{0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0};

struct CurriculumConfig {
  int stage_switch_iteration = 30;
  double stage1_max_inclination = 7.0;
  double stage2_flat_weight = 0.5;
  double stage2_moderate_weight = 1.0;  // 5 and 7 degrees
  double stage2_steep_weight = 2.0;     // 9 and 11 degrees
};

inline int curriculum_stage(long iteration, const CurriculumConfig& cc = {}) {
  return iteration < cc.stage_switch_iteration ? 1 : 2;
}

/// All inclination/orientation combinations up to `max_inclination`; flat
/// ground contributes a single entry.
inline std::vector<TerrainPlane> terrain_grid(double max_inclination = 11.0, double friction = 0.65) {
  std::vector<TerrainPlane> out;
  for (double inc : kInclinations) {
    if (inc > max_inclination) break;
    if (inc == 0.0) {
      out.push_back({0.0, 0.0, friction});
      continue;
    }
    for (double ori : kOrientations) out.push_back({inc, ori, friction});
  }
  return out;
}

inline double terrain_weight(const TerrainPlane& t, int stage, const CurriculumConfig& cc) {
  if (stage == 1) return t.inclination_deg <= cc.stage1_max_inclination ? 1.0 : 0.0;
  if (t.inclination_deg == 0.0) return cc.stage2_flat_weight;
  return t.inclination_deg >= 9.0 ? cc.stage2_steep_weight : cc.stage2_moderate_weight;
}

inline TerrainPlane sample_terrain(int stage, Rng& rng, const CurriculumConfig& cc = {}, double friction = 0.65) {
  if (stage != 1 && stage != 2) throw std::invalid_argument("curriculum stage must be 1 or 2");
  const auto grid = terrain_grid(11.0, friction);
  double total = 0.0;
  for (const auto& t : grid) total += terrain_weight(t, stage, cc);
  double u = rng.uniform() * total;
  for (const auto& t : grid) {
    const double w = terrain_weight(t, stage, cc);
    if (w <= 0.0) continue;
    if (u < w) return t;
    u -= w;
  }
  for (auto it = grid.rbegin(); it != grid.rend(); ++it)
    if (terrain_weight(*it, stage, cc) > 0.0) return *it;
  return grid.front();
}

// ---------------------------------------------------------------------------
// Episodes

struct EpisodeSummary {
  double total_return = 0.0;
  int steps = 0;
  bool fell = false;
  double forward_displacement = 0.0;
};

/// Per-step observer: (env after the step, action in effect, step result).
using StepObserver = std::function<void(const LocomotionEnv&, const ActionVector&, const StepResult&)>;

/// Runs one episode of `policy` in a fresh environment. The policy is queried
/// at reset and at every policy step (each stance exchange).
inline EpisodeSummary run_episode(const PolicyMatrix& policy, const EnvConfig& cfg, const TerrainPlane& terrain,
                                  std::uint64_t seed, const std::optional<PushEvent>& push_override = std::nullopt,
                                  bool override_push = false, const StepObserver& observer = {}) {
  EpisodeSummary out;
  if (cfg.sim.episode_len == 0) return out;
  LocomotionEnv env(cfg);
  Observation obs = env.reset(terrain, seed);
  if (override_push) env.set_push(push_override);
  const double x0 = env.state().position.x();
  ActionVector action = scale_clip_action(act(policy, obs), cfg.ranges);
  while (true) {
    StepResult r = env.step(action);
    out.total_return += r.reward;
    ++out.steps;
    if (observer) observer(env, action, r);
    if (r.done) {
      out.fell = r.info.fell;
      break;
    }
    if (r.info.policy_step) action = scale_clip_action(act(policy, r.observation), cfg.ranges);
  }
  out.forward_displacement = env.state().position.x() - x0;
  return out;
}

inline double rollout_return(const PolicyMatrix& policy, const EnvConfig& cfg, const TerrainPlane& terrain,
                             std::uint64_t seed) {
  return run_episode(policy, cfg, terrain, seed).total_return;
}

// ---------------------------------------------------------------------------
// Guided initialisation

struct Demonstration {
  Observation observation;
  RawAction target;
};

struct GuidedFit {
  PolicyMatrix policy = PolicyMatrix::Zero();
  int rank = 0;
  bool rank_deficient = false;
  std::size_t samples = 0;
};

/// Least-squares M minimising sum ||M s - a||^2 (minimum-norm when the
/// observations do not span all 11 dimensions).
inline GuidedFit guided_init(const std::vector<Demonstration>& demos) {
  GuidedFit fit;
  fit.samples = demos.size();
  if (demos.empty()) {
    fit.rank_deficient = true;
    return fit;
  }
  Eigen::MatrixXd s(demos.size(), kObsDim);
  Eigen::MatrixXd a(demos.size(), kActDim);
  for (std::size_t i = 0; i < demos.size(); ++i) {
    s.row(i) = demos[i].observation.transpose();
    a.row(i) = demos[i].target.transpose();
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(s);
  cod.setThreshold(1e-10);
  fit.rank = static_cast<int>(cod.rank());
  fit.rank_deficient = fit.rank < kObsDim;
  const Eigen::MatrixXd mt = cod.solve(a);  // 11 x 20
  fit.policy = mt.transpose();
  return fit;
}

/// Telescopic-strut posture for a support plane with roll `roll` and pitch
/// `pitch`: every foot kept vertically below its hip when the torso is
/// aligned with that plane.
inline ActionVector strut_action(double roll, double pitch, const EnvConfig& cfg, double step_len) {
  const double h = cfg.gait.desired_height;
  ActionVector out;
  for (auto& a : out) {
    a.step_len = std::clamp(step_len, cfg.ranges.step_len.lo, cfg.ranges.step_len.hi);
    a.shift_x = std::clamp(-h * std::tan(pitch), cfg.ranges.shift_x.lo, cfg.ranges.shift_x.hi);
    a.shift_y = std::clamp(h * std::tan(roll), cfg.ranges.shift_y.lo, cfg.ranges.shift_y.hi);
  }
  return out;
}

inline ActionVector strut_action(const TerrainPlane& terrain, const EnvConfig& cfg, double step_len) {
  const Vec3 n = terrain.normal();
  return strut_action(tilt_roll(n), tilt_pitch(n), cfg, step_len);
}

struct GuidedInitConfig {
  double step_len = 0.068;
  int seeds_per_terrain = 1;
  bool closed_loop = true;  // strut from the estimated plane rather than the true one
  std::uint64_t seed = 7;
};

/// Simulates the strut posture on every terrain in `terrains` and records
/// (observation, raw action) at each policy step.
inline std::vector<Demonstration> collect_strut_demos(const EnvConfig& cfg, const std::vector<TerrainPlane>& terrains,
                                                      const GuidedInitConfig& gc) {
  std::vector<Demonstration> demos;
  for (std::size_t i = 0; i < terrains.size(); ++i) {
    for (int s = 0; s < gc.seeds_per_terrain; ++s) {
      LocomotionEnv env(cfg);
      Observation obs = env.reset(terrains[i], derive_seed({gc.seed, i, static_cast<std::uint64_t>(s)}));
      auto choose = [&](const Observation& o) {
        return gc.closed_loop ? strut_action(o(9), o(10), cfg, gc.step_len) : strut_action(terrains[i], cfg, gc.step_len);
      };
      ActionVector action = choose(obs);
      demos.push_back({obs, unscale_action(action, cfg.ranges)});
      while (true) {
        const StepResult r = env.step(action);
        if (r.done) break;
        if (r.info.policy_step) {
          action = choose(r.observation);
          demos.push_back({r.observation, unscale_action(action, cfg.ranges)});
        }
      }
    }
  }
  return demos;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalReport {
  double mean = 0.0;
  std::vector<TerrainPlane> terrains;
  std::vector<EpisodeSummary> episodes;
};

inline std::uint64_t eval_seed(std::uint64_t base, std::size_t terrain_index) {
  return derive_seed({base, 0xe7a1ULL, terrain_index});
}

/// Environment used for evaluation episodes; physical randomization and
/// pushes are off unless `randomize` is set.
inline EnvConfig evaluation_config(EnvConfig cfg, bool randomize = false) {
  if (!randomize) cfg.randomization = RandomizationConfig::none();
  return cfg;
}

inline EvalReport evaluate(const PolicyMatrix& policy, const EnvConfig& cfg, const std::vector<TerrainPlane>& grid,
                           std::uint64_t seed, int workers = 1) {
  EvalReport rep;
  rep.terrains = grid;
  rep.episodes.assign(grid.size(), {});
  parallel_for(grid.size(), workers,
               [&](std::size_t i) { rep.episodes[i] = run_episode(policy, cfg, grid[i], eval_seed(seed, i)); });
  double sum = 0.0;
  for (const auto& e : rep.episodes) sum += e.total_return;
  rep.mean = grid.empty() ? 0.0 : sum / static_cast<double>(grid.size());
  return rep;
}

// ---------------------------------------------------------------------------
// Training iteration

struct IterationResult {
  PolicyMatrix policy;
  TerrainPlane terrain;
  int stage = 1;
  ArsIterationReport ars;
};

inline TerrainPlane iteration_terrain(std::uint64_t master_seed, long iteration, const CurriculumConfig& cc) {
  Rng rng(derive_seed({master_seed, static_cast<std::uint64_t>(iteration), 0x7e44a1ULL}));
  return sample_terrain(curriculum_stage(iteration, cc), rng, cc);
}

/// Samples this iteration's terrain and runs one ARS step on it.
inline IterationResult run_iteration(const PolicyMatrix& policy, const EnvConfig& cfg, const ArsHyperparams& hp,
                                     const CurriculumConfig& cc, long iteration) {
  IterationResult out;
  out.stage = curriculum_stage(iteration, cc);
  out.terrain = iteration_terrain(hp.master_seed, iteration, cc);
  const TerrainPlane terrain = out.terrain;
  out.ars = ars_iteration(flatten(policy), hp, iteration, [&](const Eigen::VectorXd& params, std::uint64_t seed) {
    return rollout_return(unflatten(params), cfg, terrain, seed);
  });
  out.policy = unflatten(out.ars.update.theta);
  return out;
}

}  // namespace slopewalk
