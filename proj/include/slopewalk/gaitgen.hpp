#pragma once

#include "slopewalk/common.hpp"
#include "slopewalk/legkin.hpp"

namespace slopewalk {

struct GaitParams {
  double max_step_len = 0.136;
  double desired_height = 0.243;
  double foot_clearance = 0.06;
  double cycle_period = 0.4;

  void validate() const {
    if (!(max_step_len > 0.0) || !(desired_height > 0.0) || !(foot_clearance > 0.0) || !(cycle_period > 0.0))
      throw ConfigError("gait parameters must be positive");
  }
};

/// The five trajectory transforms of one leg.
struct LegAction {
  double step_len = 0.0;  // major axis of the semi-ellipse
  double steer = 0.0;     // yaw of the semi-ellipse about the leg z-axis
  double shift_x = 0.0;
  double shift_y = 0.0;
  double shift_z = 0.0;
  bool operator==(const LegAction&) const = default;
};

/// Trot: FL/BR share a phase, FR/BL run half a cycle behind.
inline constexpr double phase_offset(Leg leg) {
  return (leg == Leg::FL || leg == Leg::BR) ? 0.0 : 0.5;
}

inline double wrap_unit(double v) {
  double f = v - std::floor(v);
  return f >= 1.0 ? 0.0 : f;
}

inline double trot_phase(double t, double period, Leg leg) { return wrap_unit(t / period + phase_offset(leg)); }

inline bool in_stance(double tau) { return tau < 0.5; }

/// Semi-elliptic reference in the leg frame: flat stance for tau in [0, 0.5),
/// elliptic swing arc for tau in [0.5, 1).
inline Vec3 base_trajectory_point(double tau, const LegAction& a, const GaitParams& gp) {
  tau = wrap_unit(tau);
  const double arg = 2.0 * kPi * (1.0 - tau);
  const double x = 0.5 * a.step_len * std::cos(arg);
  double z = -gp.desired_height;
  if (!in_stance(tau)) z += gp.foot_clearance * std::sin(arg);
  return {x, 0.0, z};
}

inline Vec3 transform_point(const Vec3& pt, const LegAction& a) {
  return {a.shift_x + pt.x() * std::cos(a.steer), a.shift_y + pt.x() * std::sin(a.steer), a.shift_z + pt.z()};
}

/// transform_point that refuses targets outside the safe workspace.
inline Vec3 transform_point_checked(const Vec3& pt, const LegAction& a, const LegGeometry& g) {
  Vec3 out = transform_point(pt, a);
  if (!in_workspace(out, g)) throw WorkspaceViolation("transformed foot target leaves the leg workspace");
  return out;
}

inline Vec3 foot_reference(double tau, const LegAction& a, const GaitParams& gp) {
  return transform_point(base_trajectory_point(tau, a, gp), a);
}

/// Holds the action each leg is currently executing. A new command is taken
/// up by a leg only when that leg sits on a stance/swing boundary.
class ActionLatch {
 public:
  void reset() { primed_ = false; }

  void command(const std::array<LegAction, 4>& a) { pending_ = a; }

  /// `phase_index` is the leg's position in the cycle in units of
  /// 1/cycle_steps; boundaries are 0 and cycle_steps/2.
  void advance(const std::array<long, 4>& phase_index, long cycle_steps) {
    for (Leg leg : kLegs) {
      const long k = phase_index[index(leg)];
      if (!primed_ || k == 0 || 2 * k == cycle_steps) active_[index(leg)] = pending_[index(leg)];
    }
    primed_ = true;
  }

  const LegAction& active(Leg leg) const { return active_[index(leg)]; }
  const std::array<LegAction, 4>& active() const { return active_; }

 private:
  std::array<LegAction, 4> pending_{};
  std::array<LegAction, 4> active_{};
  bool primed_ = false;
};

}  // namespace slopewalk
