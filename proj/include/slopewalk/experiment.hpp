#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "slopewalk/config.hpp"

#ifndef SLOPEWALK_VERSION
#define SLOPEWALK_VERSION "0.0.0"
#endif

namespace slopewalk {

namespace fs = std::filesystem;

/// "%.*g" without locale surprises.
inline std::string num(double v, int digits = 10) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::vector<std::string> run_header(const RunConfig& cfg, const std::string& kind) {
  return {"slopewalk " + kind, "version " SLOPEWALK_VERSION, "config_hash " + hex64(config_hash(cfg)),
          "seed " + std::to_string(cfg.ars.master_seed)};
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << text;
  if (!out) throw IoFailure("failed writing " + path.string());
}

inline std::string comment_block(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += "# " + l + "\n";
  return out;
}

/// Fits the guided initial policy from strut demonstrations on the stage-1
/// terrains.
inline GuidedFit guided_policy(const RunConfig& cfg) {
  const auto demos = collect_strut_demos(cfg.env, terrain_grid(cfg.curriculum.stage1_max_inclination), cfg.guided);
  return guided_init(demos);
}

// ---------------------------------------------------------------------------
// Training

struct TrainingRecord {
  long iteration = 0;
  int stage = 1;
  TerrainPlane terrain;
  double mean_return = 0.0;
  double max_return = 0.0;
  double min_return = 0.0;
  double sigma_r = 0.0;
  bool degenerate = false;
  bool evaluated = false;
  double eval_score = 0.0;
};

struct TrainingResult {
  PolicyMatrix initial;
  PolicyMatrix policy;
  GuidedFit guided;
  double initial_eval = 0.0;
  std::vector<TrainingRecord> records;
  std::vector<std::pair<long, double>> evals;  // (iteration, score), iteration 0 = guided init
};

using IterationCallback = std::function<void(const TrainingRecord&, const PolicyMatrix&)>;

inline TrainingRecord summarize(const IterationResult& it, long iteration) {
  TrainingRecord rec;
  rec.iteration = iteration;
  rec.stage = it.stage;
  rec.terrain = it.terrain;
  rec.sigma_r = it.ars.update.sigma_r;
  rec.degenerate = it.ars.update.degenerate;
  double sum = 0.0, mx = -std::numeric_limits<double>::infinity(), mn = std::numeric_limits<double>::infinity();
  for (const auto& r : it.ars.returns) {
    for (double v : {r.plus, r.minus}) {
      sum += v;
      mx = std::max(mx, v);
      mn = std::min(mn, v);
    }
  }
  rec.mean_return = sum / (2.0 * static_cast<double>(it.ars.returns.size()));
  rec.max_return = mx;
  rec.min_return = mn;
  return rec;
}

/// Guided initialisation followed by `cfg.training.iterations` ARS updates.
/// The evaluation score is computed for the initial policy and after every
/// `eval_every` iterations.
inline TrainingResult train(const RunConfig& cfg, const IterationCallback& on_iteration = {}) {
  cfg.validate();
  TrainingResult res;
  res.guided = guided_policy(cfg);
  res.initial = res.guided.policy;
  PolicyMatrix policy = res.initial;

  const EnvConfig eval_env = evaluation_config(cfg.env, cfg.training.eval_randomize);
  const auto grid = terrain_grid();
  auto score = [&](const PolicyMatrix& m) {
    return evaluate(m, eval_env, grid, cfg.training.eval_seed, cfg.ars.workers).mean;
  };
  res.initial_eval = score(policy);
  res.evals.emplace_back(0, res.initial_eval);

  for (long i = 0; i < cfg.training.iterations; ++i) {
    const IterationResult it = run_iteration(policy, cfg.env, cfg.ars, cfg.curriculum, i);
    policy = it.policy;
    TrainingRecord rec = summarize(it, i + 1);
    if ((i + 1) % cfg.training.eval_every == 0) {
      rec.evaluated = true;
      rec.eval_score = score(policy);
      res.evals.emplace_back(i + 1, rec.eval_score);
    }
    res.records.push_back(rec);
    if (on_iteration) on_iteration(rec, policy);
  }
  res.policy = policy;
  return res;
}

inline std::string training_csv_header() {
  return "iteration,stage,inclination_deg,orientation_deg,mean_return,max_return,min_return,sigma_r,degenerate,"
         "eval_score\n";
}

inline std::string training_csv_row(const TrainingRecord& r) {
  std::string out = std::to_string(r.iteration) + "," + std::to_string(r.stage) + "," +
                    num(r.terrain.inclination_deg) + "," + num(r.terrain.orientation_deg) + "," +
                    num(r.mean_return, 17) + "," + num(r.max_return, 17) + "," + num(r.min_return, 17) + "," +
                    num(r.sigma_r, 17) + "," + (r.degenerate ? "1" : "0") + ",";
  if (r.evaluated) out += num(r.eval_score, 17);
  return out + "\n";
}

struct TrainingOutputs {
  fs::path csv;
  fs::path timing;
  fs::path final_policy;
  fs::path guided_policy;
  std::vector<fs::path> checkpoints;
};

/// Runs training and writes train.csv, checkpoints, and the final policy
/// into `out_dir`. Wall-clock times go to a separate file so the CSV is
/// reproducible byte for byte.
inline TrainingOutputs run_training(const RunConfig& cfg, const fs::path& out_dir, std::FILE* progress = nullptr) {
  fs::create_directories(out_dir);
  TrainingOutputs outs;
  outs.csv = out_dir / "train.csv";
  outs.timing = out_dir / "train_timing.csv";
  outs.final_policy = out_dir / "policy_final.txt";
  outs.guided_policy = out_dir / "policy_guided.txt";

  const auto header = run_header(cfg, "train");
  std::string csv = comment_block(header) + training_csv_header();
  std::string timing = "iteration,wall_seconds\n";
  const auto t0 = std::chrono::steady_clock::now();

  const TrainingResult res = train(cfg, [&](const TrainingRecord& rec, const PolicyMatrix& m) {
    csv += training_csv_row(rec);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    timing += std::to_string(rec.iteration) + "," + num(wall, 6) + "\n";
    if (rec.evaluated) {
      char name[48];
      std::snprintf(name, sizeof name, "policy_iter_%04ld.txt", rec.iteration);
      auto comments = header;
      comments.push_back("iteration " + std::to_string(rec.iteration));
      comments.push_back("eval_score " + num(rec.eval_score, 17));
      save_policy(m, out_dir / name, comments);
      outs.checkpoints.push_back(out_dir / name);
    }
    if (progress) {
      std::fprintf(progress, "iter %4ld  terrain %4.0f/%-3.0f  mean %9.2f  sigma %7.2f%s\n", rec.iteration,
                   rec.terrain.inclination_deg, rec.terrain.orientation_deg, rec.mean_return, rec.sigma_r,
                   rec.evaluated ? ("  eval " + num(rec.eval_score, 7)).c_str() : "");
      std::fflush(progress);
    }
  });

  // Row 0 describes the guided initial policy.
  const std::string row0 = "0,0,,,,,,,0," + num(res.initial_eval, 17) + "\n";
  const auto pos = csv.find(training_csv_header()) + training_csv_header().size();
  csv.insert(pos, row0);

  auto guided_comments = header;
  guided_comments.push_back("guided initial policy, fit rank " + std::to_string(res.guided.rank));
  save_policy(res.initial, outs.guided_policy, guided_comments);
  auto final_comments = header;
  final_comments.push_back("iterations " + std::to_string(cfg.training.iterations));
  save_policy(res.policy, outs.final_policy, final_comments);
  write_text(outs.csv, csv);
  write_text(outs.timing, timing);
  return outs;
}

// ---------------------------------------------------------------------------
// Evaluation

inline std::string eval_csv(const EvalReport& rep, const std::vector<std::string>& header) {
  std::string out = comment_block(header);
  out += "inclination_deg,orientation_deg,return,steps,fell,forward_displacement\n";
  for (std::size_t i = 0; i < rep.terrains.size(); ++i) {
    const auto& t = rep.terrains[i];
    const auto& e = rep.episodes[i];
    out += num(t.inclination_deg) + "," + num(t.orientation_deg) + "," + num(e.total_return, 17) + "," +
           std::to_string(e.steps) + "," + (e.fell ? "1" : "0") + "," + num(e.forward_displacement, 17) + "\n";
  }
  out += "# mean " + num(rep.mean, 17) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Logged rollout

struct ScriptedPush {
  double force = 0.0;     // N along world y
  double start = 0.7;     // s
  double duration = 0.2;  // s
};

inline PushEvent to_push_event(const ScriptedPush& p, double dt) {
  return PushEvent{static_cast<int>(std::lround(p.start / dt)), static_cast<int>(std::lround(p.duration / dt)),
                   Vec3(0.0, p.force, 0.0)};
}

inline std::string rollout_csv_header() {
  std::string out = "step,time,roll,pitch,yaw,plane_roll,plane_pitch,height,dx,reward,push_force";
  for (Leg leg : kLegs)
    for (const char* ch : {"SL", "SA", "Xs", "Ys", "Zs"}) out += std::string(",") + leg_name(leg) + "_" + ch;
  return out + "\n";
}

struct RolloutLog {
  EpisodeSummary summary;
  std::string csv;
};

/// One logged episode. The scripted push, when given, replaces the one
/// drawn from the randomization config.
inline RolloutLog logged_rollout(const PolicyMatrix& policy, const EnvConfig& env, const TerrainPlane& terrain,
                                 std::uint64_t seed, const std::optional<ScriptedPush>& push,
                                 const std::vector<std::string>& header) {
  RolloutLog log;
  log.csv = comment_block(header) + rollout_csv_header();
  std::optional<PushEvent> ev;
  if (push) ev = to_push_event(*push, env.sim.dt);
  log.summary = run_episode(policy, env, terrain, seed, ev, push.has_value(),
                            [&](const LocomotionEnv& e, const ActionVector&, const StepResult& r) {
                              const long k = e.state().step - 1;  // index of the step just taken
                              std::string row = std::to_string(k) + "," + num(k * env.sim.dt) + "," +
                                                num(r.info.attitude.roll, 12) + "," + num(r.info.attitude.pitch, 12) +
                                                "," + num(r.info.attitude.yaw, 12) + "," +
                                                num(r.info.plane.roll, 12) + "," + num(r.info.plane.pitch, 12) + "," +
                                                num(r.info.height, 12) + "," + num(r.info.dx, 12) + "," +
                                                num(r.reward, 12) + "," + num(r.info.push_force, 12);
                              for (const LegAction& a : e.active_actions())
                                for (double v : {a.step_len, a.steer, a.shift_x, a.shift_y, a.shift_z})
                                  row += "," + num(v, 12);
                              log.csv += row + "\n";
                            });
  return log;
}

}  // namespace slopewalk
