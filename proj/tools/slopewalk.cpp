// Command-line front end: train, eval, rollout.

#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "slopewalk/experiment.hpp"

namespace sw = slopewalk;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

struct CommonOpts {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config, "Config file (key = value)");
  cmd->add_option("--set", o.sets, "Override a config key, e.g. --set ars.noise=0.02")->take_all();
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--workers", o.workers, "Worker threads");
}

sw::RunConfig build_config(const CommonOpts& o) {
  sw::RunConfig cfg = o.config.empty() ? sw::RunConfig{} : sw::load_config(o.config);
  for (const auto& s : o.sets) sw::apply_setting(cfg, s);
  if (o.seed) cfg.ars.master_seed = *o.seed;
  if (o.workers) cfg.ars.workers = *o.workers;
  cfg.validate();
  return cfg;
}

struct PolicyChoice {
  sw::PolicyMatrix matrix;
  std::string note;
};

PolicyChoice choose_policy(const std::string& path, const sw::RunConfig& cfg) {
  if (!path.empty()) return {sw::load_policy(path), "policy " + path};
  return {sw::guided_policy(cfg).policy, "policy guided-init (no --policy given)"};
}

std::vector<sw::TerrainPlane> select_grid(const std::optional<double>& inc, const std::optional<double>& ori) {
  std::vector<sw::TerrainPlane> out;
  for (const auto& t : sw::terrain_grid()) {
    if (inc && t.inclination_deg != *inc) continue;
    if (ori && t.orientation_deg != *ori) continue;
    out.push_back(t);
  }
  if (out.empty() && inc) out.push_back({*inc, ori.value_or(0.0)});
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slope-aware quadruped trot: train, evaluate and roll out linear policies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SLOPEWALK_VERSION);

  CommonOpts train_o, eval_o, roll_o;
  std::optional<int> iters;
  std::string train_out;
  auto* train = app.add_subcommand("train", "Guided initialisation followed by ARS training");
  add_common(train, train_o);
  train->add_option("--iters", iters, "Number of ARS iterations");
  train->add_option("--out", train_out, "Output directory (default: output.dir)");

  std::string eval_policy, eval_out = "eval.csv";
  std::optional<double> eval_inc, eval_ori;
  auto* eval = app.add_subcommand("eval", "Evaluate a policy on the terrain grid");
  add_common(eval, eval_o);
  eval->add_option("--policy", eval_policy, "Policy file (default: guided initial policy)");
  eval->add_option("--inclination,--incline", eval_inc, "Only this inclination (deg)");
  eval->add_option("--orientation", eval_ori, "Only this orientation (deg)");
  eval->add_option("--out", eval_out, "Evaluation CSV path");

  std::string roll_policy, roll_out = "rollout.csv";
  double roll_inc = 0.0, roll_ori = 0.0;
  std::optional<double> push;
  double push_at = 0.7, push_dur = 0.2;
  bool roll_randomize = false;
  auto* roll = app.add_subcommand("rollout", "Run one logged episode");
  add_common(roll, roll_o);
  roll->add_option("--policy", roll_policy, "Policy file (default: guided initial policy)");
  roll->add_option("--inclination,--incline", roll_inc, "Terrain inclination (deg)");
  roll->add_option("--orientation", roll_ori, "Terrain orientation (deg)");
  roll->add_option("--push", push, "Lateral push force along world y (N)");
  roll->add_option("--push-at", push_at, "Push start time (s)");
  roll->add_option("--push-dur", push_dur, "Push duration (s)");
  roll->add_flag("--randomize", roll_randomize, "Sample friction, mass and motor strength from the seed");
  roll->add_option("--out", roll_out, "Per-step CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  sw::RunConfig cfg;
  try {
    if (train->parsed()) {
      cfg = build_config(train_o);
      if (iters) cfg.training.iterations = *iters;
    } else if (eval->parsed()) {
      cfg = build_config(eval_o);
    } else {
      cfg = build_config(roll_o);
    }
    cfg.validate();
  } catch (const sw::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const sw::IoFailure& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  }

  try {
    if (train->parsed()) {
      const sw::fs::path dir = train_out.empty() ? sw::fs::path(cfg.output_dir) : sw::fs::path(train_out);
      const auto outs = sw::run_training(cfg, dir, stdout);
      std::printf("wrote %s, %s, %zu checkpoints\n", outs.csv.string().c_str(), outs.final_policy.string().c_str(),
                  outs.checkpoints.size());
    } else if (eval->parsed()) {
      const auto choice = choose_policy(eval_policy, cfg);
      const auto grid = select_grid(eval_inc, eval_ori);
      const auto env = sw::evaluation_config(cfg.env, cfg.training.eval_randomize);
      const auto rep = sw::evaluate(choice.matrix, env, grid, cfg.training.eval_seed, cfg.ars.workers);
      auto header = sw::run_header(cfg, "eval");
      header.push_back(choice.note);
      sw::write_text(eval_out, sw::eval_csv(rep, header));
      for (std::size_t i = 0; i < grid.size(); ++i)
        std::printf("%5.1f deg  %5.1f deg  return %9.3f%s\n", grid[i].inclination_deg, grid[i].orientation_deg,
                    rep.episodes[i].total_return, rep.episodes[i].fell ? "  (fell)" : "");
      std::printf("mean %.3f over %zu terrains\n", rep.mean, grid.size());
    } else {
      const auto choice = choose_policy(roll_policy, cfg);
      const auto env = sw::evaluation_config(cfg.env, roll_randomize);
      std::optional<sw::ScriptedPush> scripted;
      if (push) scripted = sw::ScriptedPush{*push, push_at, push_dur};
      auto header = sw::run_header(cfg, "rollout");
      header.push_back(choice.note);
      header.push_back("terrain " + sw::num(roll_inc) + " " + sw::num(roll_ori));
      if (scripted)
        header.push_back("push " + sw::num(scripted->force) + " N at " + sw::num(push_at) + " s for " +
                         sw::num(push_dur) + " s");
      const sw::TerrainPlane terrain{roll_inc, roll_ori};
      const auto log = sw::logged_rollout(choice.matrix, env, terrain, cfg.ars.master_seed, scripted, header);
      sw::write_text(roll_out, log.csv);
      std::printf("return %.3f  steps %d  fell %s  forward %.3f m\n", log.summary.total_return, log.summary.steps,
                  log.summary.fell ? "yes" : "no", log.summary.forward_displacement);
    }
  } catch (const sw::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kOk;
}
