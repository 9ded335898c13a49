#pragma once

#include <optional>

#include "slopewalk/common.hpp"
#include "slopewalk/gaitgen.hpp"
#include "slopewalk/legkin.hpp"
#include "slopewalk/policy.hpp"
#include "slopewalk/reward.hpp"
#include "slopewalk/slopeest.hpp"

namespace slopewalk {

/// Inclined plane through the world origin. Orientation 0 rises along +x
/// (uphill walking), orientation 90 rises along +y (side hill).
struct TerrainPlane {
  double inclination_deg = 0.0;
  double orientation_deg = 0.0;
  double friction_mu = 0.65;

  Vec3 normal() const {
    const double t = std::tan(deg2rad(inclination_deg));
    const double psi = deg2rad(orientation_deg);
    return Vec3(-t * std::cos(psi), -t * std::sin(psi), 1.0).normalized();
  }
  bool operator==(const TerrainPlane&) const = default;
};

struct BodyParams {
  double mass = 10.0;
  Vec3 dims{0.55, 0.3, 0.1};
  double added_mass_arm = 0.25;  // front/back payload distance from the centre
};

struct ContactParams {
  double stiffness = 5000.0;
  double damping = 100.0;
  double tangential_damping = 300.0;  // viscous slip resistance before the Coulomb clamp
};

struct SimConfig {
  double dt = 0.005;
  int substeps = 5;
  int episode_len = 400;
  double joint_time_constant = 0.02;
  double motor_moment_arm = 0.25;
  double nominal_motor_strength = 6.5;
  double fall_angle_deg = 45.0;
  double fall_height_frac = 0.5;
  int standing_window = 50;
  double standing_threshold = 0.02;
  bool gait_clock = true;  // false freezes every leg at its reset phase
};

struct RandomizationConfig {
  bool randomize_friction = true;
  double friction_min = 0.5, friction_max = 0.8;
  bool randomize_mass = true;
  double added_mass_min = 0.0, added_mass_max = 0.2;
  bool randomize_motor = true;
  double motor_strength_min = 5.0, motor_strength_max = 8.0;
  bool push_enabled = true;
  double push_force_min = 60.0, push_force_max = 120.0;
  int push_steps = 10;

  static RandomizationConfig none() {
    RandomizationConfig r;
    r.randomize_friction = r.randomize_mass = r.randomize_motor = r.push_enabled = false;
    return r;
  }
};

struct PushEvent {
  int start_step = 0;
  int steps = 0;
  Vec3 force = Vec3::Zero();
  bool active_at(long step) const { return step >= start_step && step < start_step + steps; }
};

/// Lateral push at the middle of the episode; nullopt when disabled.
inline std::optional<PushEvent> schedule_push(const RandomizationConfig& rand, int episode_len, Rng& rng) {
  const double magnitude = rng.uniform(rand.push_force_min, rand.push_force_max);
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  if (!rand.push_enabled) return std::nullopt;
  return PushEvent{episode_len / 2, rand.push_steps, Vec3(0.0, sign * magnitude, 0.0)};
}

struct EnvConfig {
  LegGeometry geometry;
  GaitParams gait;
  RewardWeights reward;
  ActionRanges ranges;
  BodyParams body;
  ContactParams contact;
  SimConfig sim;
  RandomizationConfig randomization;
  SlopeEstimatorConfig estimator;

  void validate() const {
    geometry.validate();
    gait.validate();
    reward.validate();
    ranges.validate();
    if (!(sim.dt > 0.0) || sim.substeps < 1 || sim.episode_len < 0) throw ConfigError("invalid simulation timing");
    const double cycle = gait.cycle_period / sim.dt;
    const long steps = std::lround(cycle);
    if (std::abs(cycle - static_cast<double>(steps)) > 1e-9 || steps < 2 || steps % 2 != 0)
      throw ConfigError("gait cycle period must be an even multiple of the control step");
    if (!(body.mass > 0.0)) throw ConfigError("torso mass must be positive");
    if (!(sim.joint_time_constant > 0.0)) throw ConfigError("joint time constant must be positive");
    if (detail::solve_ik(Vec3(0.0, 0.0, -gait.desired_height), geometry).status != detail::IkStatus::Ok)
      throw ConfigError("desired height is not reachable by the leg geometry");
  }

  long cycle_steps() const { return std::lround(gait.cycle_period / sim.dt); }
  long policy_interval() const { return cycle_steps() / 2; }
  /// Largest forward displacement one control step can produce: a full step
  /// length per half cycle.
  double max_forward_per_step() const { return gait.max_step_len * sim.dt / (0.5 * gait.cycle_period); }
};

struct SimState {
  Vec3 position = Vec3::Zero();  // centre of mass, world
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Vec3 velocity = Vec3::Zero();  // world
  Vec3 omega = Vec3::Zero();     // body
  std::array<LegJointAngles, 4> joints{};
  std::array<LegJointAngles, 4> joint_velocity{};
  long step = 0;

  Mat3 rotation() const { return orientation.toRotationMatrix(); }
};

inline bool bitwise_equal(const SimState& a, const SimState& b) {
  auto same = [](const LegJointAngles& x, const LegJointAngles& y) { return x == y; };
  for (int i = 0; i < 4; ++i)
    if (!same(a.joints[i], b.joints[i]) || !same(a.joint_velocity[i], b.joint_velocity[i])) return false;
  return a.position == b.position && a.orientation.coeffs() == b.orientation.coeffs() && a.velocity == b.velocity &&
         a.omega == b.omega && a.step == b.step;
}

/// Per-episode physical parameters drawn at reset.
struct EpisodeParams {
  double friction_mu = 0.65;
  double added_mass_front = 0.0;
  double added_mass_back = 0.0;
  double motor_strength = 6.5;
  std::optional<PushEvent> push;
};

struct StepInfo {
  double dx = 0.0;
  double height = 0.0;
  Attitude attitude;
  PlaneEstimate plane;
  bool standing = false;
  bool policy_step = false;
  bool exchange = false;
  bool fell = false;
  double push_force = 0.0;
  double friction_excess = 0.0;  // max over substeps of |F_t| - mu*N
  double min_normal_force = 0.0;
  int contacts = 0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Rigid torso on kinematic legs over an inclined plane with penalty contact.
class LocomotionEnv {
 public:
  explicit LocomotionEnv(EnvConfig cfg) : cfg_(std::move(cfg)), estimator_(cfg_.estimator) {
    cfg_.validate();
    standing_ = StandingDetector(cfg_.sim.standing_window, cfg_.sim.standing_threshold);
  }

  const EnvConfig& config() const { return cfg_; }

  Observation reset(const TerrainPlane& terrain, std::uint64_t seed) {
    terrain_ = terrain;
    normal_ = terrain.normal();
    rng_ = Rng(seed);
    sample_episode();
    compute_mass_properties();

    const Mat3 r = aligned_rotation(normal_);
    state_ = SimState{};
    state_.orientation = Eigen::Quaterniond(r);
    state_.position = cfg_.gait.desired_height * normal_ + r * com_offset_;
    for (Leg leg : kLegs) {
      const long k = phase_index(leg, 0);
      const Vec3 foot = base_trajectory_point(static_cast<double>(k) / cycle_steps_, LegAction{}, cfg_.gait);
      const auto sol = detail::solve_ik(clamp_to_workspace(foot, cfg_.geometry), cfg_.geometry);
      state_.joints[index(leg)] = clamp_joints(sol.angles);
    }
    latch_.reset();
    estimator_.reset();
    capture_.reset();
    standing_.reset();
    external_force_.setZero();
    external_torque_.setZero();
    history_.fill(attitude_of(state_.rotation()));
    capture_.observe(0.0, stance_flags(0), feet_body(), state_.rotation());
    is_reset_ = true;
    done_ = false;
    return observation();
  }

  StepResult step(const ActionVector& action) {
    if (!is_reset_) throw NotReset("step() called before reset()");
    StepResult out;
    const long k = state_.step;

    latch_.command(action);
    std::array<long, 4> phases{};
    for (Leg leg : kLegs) phases[index(leg)] = phase_index(leg, k);
    latch_.advance(phases, cycle_steps_);

    std::array<LegJointAngles, 4> targets;
    for (Leg leg : kLegs) {
      const double tau = static_cast<double>(phases[index(leg)]) / static_cast<double>(cycle_steps_);
      const Vec3 ref = foot_reference(tau, latch_.active(leg), cfg_.gait);
      const auto sol = detail::solve_ik(clamp_to_workspace(ref, cfg_.geometry), cfg_.geometry);
      targets[index(leg)] =
          sol.status == detail::IkStatus::Unreachable ? state_.joints[index(leg)] : clamp_joints(sol.angles);
    }

    const double x_before = state_.position.x();
    const double push = active_push(k);
    out.info.push_force = push;
    out.info.min_normal_force = std::numeric_limits<double>::infinity();
    const double h = cfg_.sim.dt / cfg_.sim.substeps;
    for (int s = 0; s < cfg_.sim.substeps; ++s) substep(h, targets, push, out.info);
    if (!std::isfinite(out.info.min_normal_force)) out.info.min_normal_force = 0.0;

    state_.step = k + 1;
    const long now = state_.step;
    const Mat3 rot = state_.rotation();
    const Attitude att = attitude_of(rot);

    if (auto snap = capture_.observe(static_cast<double>(now) * cfg_.sim.dt, stance_flags(now), feet_body(), rot)) {
      estimator_.update(*snap);
      out.info.exchange = true;
    }
    if (now % policy_interval_ == 0) {
      history_.push(att);
      out.info.policy_step = true;
    }

    out.info.dx = state_.position.x() - x_before;
    out.info.height = torso_height(now);
    out.info.attitude = att;
    out.info.plane = estimator_.estimate();
    out.info.standing = standing_.push(out.info.dx);

    RewardInputs in;
    in.torso_roll = att.roll;
    in.torso_pitch = att.pitch;
    in.torso_yaw = att.yaw;
    in.plane_roll = out.info.plane.roll;
    in.plane_pitch = out.info.plane.pitch;
    in.height = out.info.height;
    in.dx = out.info.dx;
    in.standing = out.info.standing;
    out.reward = compute_reward(in, cfg_.reward, cfg_.max_forward_per_step());

    const double fall = deg2rad(cfg_.sim.fall_angle_deg);
    out.info.fell = !std::isfinite(out.info.height) || out.info.height < cfg_.sim.fall_height_frac * cfg_.gait.desired_height ||
                    std::abs(att.roll) > fall || std::abs(att.pitch) > fall || !state_.position.allFinite();
    out.done = out.info.fell || now >= cfg_.sim.episode_len;
    done_ = out.done;
    out.observation = observation();
    return out;
  }

  Observation observation() const { return build_observation(history_, estimator_.estimate()); }

  /// Constant world-frame force/torque on the torso until cleared (test hook).
  void set_external_wrench(const Vec3& force, const Vec3& torque = Vec3::Zero()) {
    external_force_ = force;
    external_torque_ = torque;
  }

  /// Replaces the push drawn at reset.
  void set_push(std::optional<PushEvent> push) { episode_.push = push; }

  const SimState& state() const { return state_; }
  /// Overwrites the rigid-body and joint state (test hook).
  void set_state(const SimState& s) { state_ = s; }
  const EpisodeParams& episode() const { return episode_; }
  const TerrainPlane& terrain() const { return terrain_; }
  const SlopeEstimator& estimator() const { return estimator_; }
  const std::array<LegAction, 4>& active_actions() const { return latch_.active(); }
  bool done() const { return done_; }
  double total_mass() const { return mass_; }

  /// Body-frame foot positions measured from the hip-mount origin.
  std::array<Vec3, 4> feet_body() const {
    std::array<Vec3, 4> out;
    for (Leg leg : kLegs)
      out[index(leg)] =
          cfg_.geometry.hip_positions_body[index(leg)] + forward_kinematics(state_.joints[index(leg)], cfg_.geometry);
    return out;
  }

  std::array<Vec3, 4> feet_world() const {
    const Mat3 r = state_.rotation();
    const auto body = feet_body();
    std::array<Vec3, 4> out;
    for (int i = 0; i < 4; ++i) out[i] = state_.position + r * (body[i] - com_offset_);
    return out;
  }

  /// Kinetic + gravitational + contact-spring energy.
  double mechanical_energy() const {
    double e = 0.5 * mass_ * state_.velocity.squaredNorm() + 0.5 * state_.omega.dot(inertia_ * state_.omega) +
               mass_ * kGravity * state_.position.z();
    for (const Vec3& p : feet_world()) {
      const double pen = -normal_.dot(p);
      if (pen > 0.0) e += 0.5 * cfg_.contact.stiffness * pen * pen;
    }
    return e;
  }

  /// Stance flags from the gait schedule at control step `step`.
  std::array<bool, 4> stance_flags(long step) const {
    std::array<bool, 4> out{};
    for (Leg leg : kLegs) out[index(leg)] = 2 * phase_index(leg, step) < cycle_steps_;
    return out;
  }

  long phase_index(Leg leg, long step) const {
    const long k = cfg_.sim.gait_clock ? step : 0;
    const long offset = phase_offset(leg) == 0.0 ? 0 : cycle_steps_ / 2;
    return (k + offset) % cycle_steps_;
  }

 private:
  void sample_episode() {
    const auto& rc = cfg_.randomization;
    episode_ = EpisodeParams{};
    const double mu = rng_.uniform(rc.friction_min, rc.friction_max);
    const double mf = rng_.uniform(rc.added_mass_min, rc.added_mass_max);
    const double mb = rng_.uniform(rc.added_mass_min, rc.added_mass_max);
    const double motor = rng_.uniform(rc.motor_strength_min, rc.motor_strength_max);
    episode_.friction_mu = rc.randomize_friction ? mu : terrain_.friction_mu;
    episode_.added_mass_front = rc.randomize_mass ? mf : 0.0;
    episode_.added_mass_back = rc.randomize_mass ? mb : 0.0;
    episode_.motor_strength = rc.randomize_motor ? motor : cfg_.sim.nominal_motor_strength;
    episode_.push = schedule_push(rc, cfg_.sim.episode_len, rng_);
    cycle_steps_ = cfg_.cycle_steps();
    policy_interval_ = cfg_.policy_interval();
  }

  void compute_mass_properties() {
    const auto& b = cfg_.body;
    const double mf = episode_.added_mass_front;
    const double mb = episode_.added_mass_back;
    mass_ = b.mass + mf + mb;
    // Offsets are relative to the geometric centre (the hip-mount origin).
    com_offset_ = Vec3((mf - mb) * b.added_mass_arm / mass_, 0.0, 0.0);
    const Vec3 d = b.dims;
    Mat3 inertia = Mat3::Zero();
    inertia.diagonal() << b.mass / 12.0 * (d.y() * d.y() + d.z() * d.z()),
        b.mass / 12.0 * (d.x() * d.x() + d.z() * d.z()), b.mass / 12.0 * (d.x() * d.x() + d.y() * d.y());
    // Parallel-axis terms about the shifted centre of mass.
    auto point = [&](double m, const Vec3& at) {
      const Vec3 r = at - com_offset_;
      inertia += m * (r.squaredNorm() * Mat3::Identity() - r * r.transpose());
    };
    point(b.mass, Vec3::Zero());
    point(mf, Vec3(b.added_mass_arm, 0.0, 0.0));
    point(mb, Vec3(-b.added_mass_arm, 0.0, 0.0));
    inertia_ = inertia;
    inertia_inv_ = inertia.inverse();
  }

  LegJointAngles clamp_joints(const LegJointAngles& q) const {
    const auto& g = cfg_.geometry;
    return {g.abd_limits.clamp(q.abd), g.hip_limits.clamp(q.hip), g.knee_limits.clamp(q.knee)};
  }

  double active_push(long step) const {
    return episode_.push && episode_.push->active_at(step) ? episode_.push->force.y() : 0.0;
  }

  void substep(double h, const std::array<LegJointAngles, 4>& targets, double push_y, StepInfo& info) {
    const double blend = 1.0 - std::exp(-h / cfg_.sim.joint_time_constant);
    const Mat3 rot = state_.rotation();
    const Vec3 omega_world = rot * state_.omega;
    const double motor_cap = episode_.motor_strength / cfg_.sim.motor_moment_arm;
    const double mu = episode_.friction_mu;

    Vec3 force = mass_ * Vec3(0.0, 0.0, -kGravity) + external_force_ + Vec3(0.0, push_y, 0.0);
    Vec3 torque_world = external_torque_;

    for (Leg leg : kLegs) {
      const int i = index(leg);
      LegJointAngles& q = state_.joints[i];
      const LegJointAngles& qt = targets[i];
      const Vec3 before = forward_kinematics(q, cfg_.geometry);
      const LegJointAngles next{q.abd + blend * (qt.abd - q.abd), q.hip + blend * (qt.hip - q.hip),
                                q.knee + blend * (qt.knee - q.knee)};
      state_.joint_velocity[i] = {(next.abd - q.abd) / h, (next.hip - q.hip) / h, (next.knee - q.knee) / h};
      q = next;
      const Vec3 after = forward_kinematics(q, cfg_.geometry);

      const Vec3 arm = rot * (cfg_.geometry.hip_positions_body[i] + after - com_offset_);
      const Vec3 foot = state_.position + arm;
      const double pen = -normal_.dot(foot);
      if (pen <= 0.0) continue;
      const Vec3 foot_vel = state_.velocity + omega_world.cross(arm) + rot * ((after - before) / h);
      const double vn = normal_.dot(foot_vel);
      const double fn = std::max(0.0, cfg_.contact.stiffness * pen - cfg_.contact.damping * vn);
      const Vec3 vt = foot_vel - vn * normal_;
      Vec3 ft = -cfg_.contact.tangential_damping * vt;
      const double cap = std::min(mu * fn, motor_cap);
      const double ft_norm = ft.norm();
      if (ft_norm > cap) ft *= cap / ft_norm;
      info.friction_excess = std::max(info.friction_excess, ft.norm() - mu * fn);
      info.min_normal_force = std::min(info.min_normal_force, fn);
      ++info.contacts;
      const Vec3 f = fn * normal_ + ft;
      force += f;
      torque_world += arm.cross(f);
    }

    state_.velocity += h * force / mass_;
    const Vec3 torque_body = rot.transpose() * torque_world;
    const Vec3 w = state_.omega;
    state_.omega += h * (inertia_inv_ * (torque_body - w.cross(inertia_ * w)));
    state_.position += h * state_.velocity;
    const double angle = state_.omega.norm() * h;
    if (angle > 0.0) {
      state_.orientation = state_.orientation * Eigen::Quaterniond(Eigen::AngleAxisd(angle, state_.omega.normalized()));
      state_.orientation.normalize();
    }
  }

  /// Distance from the centre of mass to the plane through the lowest stance
  /// foot, measured along the current plane-normal estimate.
  double torso_height(long step) const {
    const Vec3 n = estimator_.estimate().normal;
    const auto feet = feet_world();
    const auto stance = stance_flags(step);
    double lowest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i)
      if (stance[i]) lowest = std::min(lowest, n.dot(feet[i]));
    return n.dot(state_.position) - lowest;
  }

  EnvConfig cfg_;
  TerrainPlane terrain_;
  Vec3 normal_ = Vec3::UnitZ();
  Rng rng_;
  EpisodeParams episode_;
  SimState state_;
  double mass_ = 0.0;
  Vec3 com_offset_ = Vec3::Zero();
  Mat3 inertia_ = Mat3::Identity();
  Mat3 inertia_inv_ = Mat3::Identity();
  long cycle_steps_ = 80;
  long policy_interval_ = 40;
  ActionLatch latch_;
  SlopeEstimator estimator_;
  ContactPairCapture capture_;
  StandingDetector standing_;
  AttitudeHistory history_;
  Vec3 external_force_ = Vec3::Zero();
  Vec3 external_torque_ = Vec3::Zero();
  bool is_reset_ = false;
  bool done_ = false;
};

}  // namespace slopewalk
