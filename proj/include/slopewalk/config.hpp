#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include "slopewalk/trainer.hpp"

namespace slopewalk {

struct TrainingConfig {
  int iterations = 30;
  int eval_every = 3;
  std::uint64_t eval_seed = 11;
  bool eval_randomize = false;
};

/// Every tunable of a run. Text form is flat `section.key = value` lines.
struct RunConfig {
  EnvConfig env;
  ArsHyperparams ars;
  CurriculumConfig curriculum;
  GuidedInitConfig guided;
  TrainingConfig training;
  std::string output_dir = "run";

  /// Copies values that live in more than one module config.
  void sync() { env.reward.desired_height = env.gait.desired_height; }

  void validate() const {
    env.validate();
    ars.validate();
    if (training.iterations < 0) throw ConfigError("training.iterations must be non-negative");
    if (training.eval_every < 1) throw ConfigError("training.eval_every must be positive");
    if (curriculum.stage_switch_iteration < 0) throw ConfigError("curriculum.stage_switch_iteration must be non-negative");
    if (guided.seeds_per_terrain < 1) throw ConfigError("guided.seeds_per_terrain must be positive");
  }
};

namespace detail {

using FieldRef = std::variant<double*, int*, bool*, std::uint64_t*, std::string*>;

template <class F>
void visit_fields(RunConfig& c, F&& f) {
  auto& g = c.env.geometry;
  f("geometry.upper_link_len", FieldRef{&g.upper_link_len});
  f("geometry.lower_link_len", FieldRef{&g.lower_link_len});
  f("geometry.abduction_offset", FieldRef{&g.abduction_offset});
  f("geometry.abd_min", FieldRef{&g.abd_limits.min});
  f("geometry.abd_max", FieldRef{&g.abd_limits.max});
  f("geometry.hip_min", FieldRef{&g.hip_limits.min});
  f("geometry.hip_max", FieldRef{&g.hip_limits.max});
  f("geometry.knee_min", FieldRef{&g.knee_limits.min});
  f("geometry.knee_max", FieldRef{&g.knee_limits.max});

  auto& gait = c.env.gait;
  f("gait.max_step_len", FieldRef{&gait.max_step_len});
  f("gait.desired_height", FieldRef{&gait.desired_height});
  f("gait.foot_clearance", FieldRef{&gait.foot_clearance});
  f("gait.cycle_period", FieldRef{&gait.cycle_period});

  auto& r = c.env.ranges;
  f("action.step_len_min", FieldRef{&r.step_len.lo});
  f("action.step_len_max", FieldRef{&r.step_len.hi});
  f("action.steer_min", FieldRef{&r.steer.lo});
  f("action.steer_max", FieldRef{&r.steer.hi});
  f("action.shift_x_min", FieldRef{&r.shift_x.lo});
  f("action.shift_x_max", FieldRef{&r.shift_x.hi});
  f("action.shift_y_min", FieldRef{&r.shift_y.lo});
  f("action.shift_y_max", FieldRef{&r.shift_y.hi});
  f("action.shift_z_min", FieldRef{&r.shift_z.lo});
  f("action.shift_z_max", FieldRef{&r.shift_z.hi});

  auto& w = c.env.reward;
  f("reward.w_roll", FieldRef{&w.w_roll});
  f("reward.w_pitch", FieldRef{&w.w_pitch});
  f("reward.w_yaw", FieldRef{&w.w_yaw});
  f("reward.w_height", FieldRef{&w.w_height});
  f("reward.forward_weight", FieldRef{&w.forward});
  f("reward.standing_penalty", FieldRef{&w.standing_penalty});
  f("reward.desired_yaw", FieldRef{&w.desired_yaw});

  auto& b = c.env.body;
  f("body.mass", FieldRef{&b.mass});
  f("body.length", FieldRef{&b.dims.x()});
  f("body.width", FieldRef{&b.dims.y()});
  f("body.height", FieldRef{&b.dims.z()});
  f("body.added_mass_arm", FieldRef{&b.added_mass_arm});

  auto& ct = c.env.contact;
  f("contact.stiffness", FieldRef{&ct.stiffness});
  f("contact.damping", FieldRef{&ct.damping});
  f("contact.tangential_damping", FieldRef{&ct.tangential_damping});

  auto& s = c.env.sim;
  f("sim.dt", FieldRef{&s.dt});
  f("sim.substeps", FieldRef{&s.substeps});
  f("sim.episode_len", FieldRef{&s.episode_len});
  f("sim.joint_time_constant", FieldRef{&s.joint_time_constant});
  f("sim.motor_moment_arm", FieldRef{&s.motor_moment_arm});
  f("sim.nominal_motor_strength", FieldRef{&s.nominal_motor_strength});
  f("sim.fall_angle_deg", FieldRef{&s.fall_angle_deg});
  f("sim.fall_height_frac", FieldRef{&s.fall_height_frac});
  f("sim.standing_window", FieldRef{&s.standing_window});
  f("sim.standing_threshold", FieldRef{&s.standing_threshold});
  f("sim.gait_clock", FieldRef{&s.gait_clock});

  auto& rz = c.env.randomization;
  f("randomization.friction", FieldRef{&rz.randomize_friction});
  f("randomization.friction_min", FieldRef{&rz.friction_min});
  f("randomization.friction_max", FieldRef{&rz.friction_max});
  f("randomization.mass", FieldRef{&rz.randomize_mass});
  f("randomization.added_mass_min", FieldRef{&rz.added_mass_min});
  f("randomization.added_mass_max", FieldRef{&rz.added_mass_max});
  f("randomization.motor", FieldRef{&rz.randomize_motor});
  f("randomization.motor_strength_min", FieldRef{&rz.motor_strength_min});
  f("randomization.motor_strength_max", FieldRef{&rz.motor_strength_max});
  f("randomization.push", FieldRef{&rz.push_enabled});
  f("randomization.push_force_min", FieldRef{&rz.push_force_min});
  f("randomization.push_force_max", FieldRef{&rz.push_force_max});
  f("randomization.push_steps", FieldRef{&rz.push_steps});

  f("estimator.low_pass", FieldRef{&c.env.estimator.low_pass});
  f("estimator.low_pass_alpha", FieldRef{&c.env.estimator.low_pass_alpha});

  f("ars.step_size", FieldRef{&c.ars.step_size});
  f("ars.noise", FieldRef{&c.ars.noise});
  f("ars.num_directions", FieldRef{&c.ars.num_directions});
  f("ars.top_directions", FieldRef{&c.ars.top_directions});
  f("ars.workers", FieldRef{&c.ars.workers});
  f("ars.master_seed", FieldRef{&c.ars.master_seed});

  f("curriculum.stage_switch_iteration", FieldRef{&c.curriculum.stage_switch_iteration});
  f("curriculum.stage1_max_inclination", FieldRef{&c.curriculum.stage1_max_inclination});
  f("curriculum.stage2_flat_weight", FieldRef{&c.curriculum.stage2_flat_weight});
  f("curriculum.stage2_moderate_weight", FieldRef{&c.curriculum.stage2_moderate_weight});
  f("curriculum.stage2_steep_weight", FieldRef{&c.curriculum.stage2_steep_weight});

  f("guided.step_len", FieldRef{&c.guided.step_len});
  f("guided.seeds_per_terrain", FieldRef{&c.guided.seeds_per_terrain});
  f("guided.closed_loop", FieldRef{&c.guided.closed_loop});
  f("guided.seed", FieldRef{&c.guided.seed});

  f("training.iterations", FieldRef{&c.training.iterations});
  f("training.eval_every", FieldRef{&c.training.eval_every});
  f("training.eval_seed", FieldRef{&c.training.eval_seed});
  f("training.eval_randomize", FieldRef{&c.training.eval_randomize});

  f("output.dir", FieldRef{&c.output_dir});
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline void assign_field(const FieldRef& ref, const std::string& key, const std::string& text) {
  auto bad = [&] { return ConfigError("bad value for " + key + ": \"" + text + "\""); };
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) {
          *p = text;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1") *p = true;
          else if (text == "false" || text == "0") *p = false;
          else throw bad();
        } else {
          T v{};
          const char* end = text.data() + text.size();
          auto [ptr, ec] = std::from_chars(text.data(), end, v);
          if (ec != std::errc() || ptr != end) throw bad();
          if constexpr (std::is_same_v<T, double>)
            if (!std::isfinite(v)) throw bad();
          *p = v;
        }
      },
      ref);
}

inline std::string format_field(const FieldRef& ref) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return *p;
        } else if constexpr (std::is_same_v<T, bool>) {
          return *p ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          char buf[40];
          const auto res = std::to_chars(buf, buf + sizeof buf, *p);  // shortest round-trip form
          return std::string(buf, res.ptr);
        } else {
          return std::to_string(*p);
        }
      },
      ref);
}

}  // namespace detail

/// Applies one `key=value` assignment. Unknown keys throw ConfigError.
inline void apply_setting(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got \"" + assignment + "\"");
  const std::string key = detail::trim(assignment.substr(0, eq));
  const std::string value = detail::trim(assignment.substr(eq + 1));
  bool found = false;
  detail::visit_fields(cfg, [&](const char* name, const detail::FieldRef& ref) {
    if (key == name) {
      detail::assign_field(ref, key, value);
      found = true;
    }
  });
  if (!found) throw ConfigError("unknown config key \"" + key + "\"");
  cfg.sync();
}

/// Parses config text on top of the defaults. Blank lines and '#' comments
/// are ignored; a `[section]` line prefixes the keys that follow.
inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    try {
      apply_setting(base, section.empty() ? line : section + "." + line);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  base.sync();
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Canonical text form: every key in declaration order.
inline std::string dump_config(const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::string out;
  detail::visit_fields(copy, [&](const char* name, const detail::FieldRef& ref) {
    out += name;
    out += " = ";
    out += detail::format_field(ref);
    out += '\n';
  });
  return out;
}

/// FNV-1a over the canonical dump, excluding the worker count and output
/// directory (neither affects results).
inline std::uint64_t config_hash(const RunConfig& cfg) {
  RunConfig copy = cfg;
  copy.ars.workers = 1;
  copy.output_dir.clear();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump_config(copy)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace slopewalk
