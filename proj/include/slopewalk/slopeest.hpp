#pragma once

#include <optional>

#include "slopewalk/common.hpp"

namespace slopewalk {

/// Foot positions (body frame, leg order FL, FR, BL, BR) around one stance
/// exchange plus the torso rotation at the touch-down sample.
struct ContactSnapshot {
  std::array<Vec3, 4> feet_body{};
  Mat3 torso_rotation = Mat3::Identity();
  double timestamp = 0.0;
};

struct PlaneEstimate {
  Vec3 normal = Vec3::UnitZ();
  double roll = 0.0;
  double pitch = 0.0;
};

inline PlaneEstimate plane_from_normal(Vec3 n) {
  n.normalize();
  if (n.z() < 0.0) n = -n;
  return {n, tilt_roll(n), tilt_pitch(n)};
}

/// Plane through the four stance feet from the cross product of the two
/// diagonals, expressed in the world frame.
inline PlaneEstimate estimate_support_plane(const ContactSnapshot& s) {
  std::array<Vec3, 4> world;
  for (int i = 0; i < 4; ++i) world[i] = s.torso_rotation * s.feet_body[i];
  const Vec3 fr_bl = world[index(Leg::FR)] - world[index(Leg::BL)];
  const Vec3 fl_br = world[index(Leg::FL)] - world[index(Leg::BR)];
  const Vec3 n = fr_bl.cross(fl_br);
  if (n.norm() < 1e-9) throw DegenerateContacts("stance diagonals are parallel");
  return plane_from_normal(n);
}

/// Pairs the outgoing stance feet (last stance sample) with the incoming ones
/// (first stance sample) whenever the diagonal pair in stance changes.
class ContactPairCapture {
 public:
  void reset() { has_prev_ = false; }

  std::optional<ContactSnapshot> observe(double time, const std::array<bool, 4>& stance,
                                         const std::array<Vec3, 4>& feet_body, const Mat3& rotation) {
    std::optional<ContactSnapshot> out;
    if (has_prev_ && stance != prev_stance_) {
      ContactSnapshot snap;
      bool complete = true;
      for (int i = 0; i < 4; ++i) {
        if (prev_stance_[i] && !stance[i]) snap.feet_body[i] = prev_feet_[i];
        else if (stance[i] && !prev_stance_[i]) snap.feet_body[i] = feet_body[i];
        else complete = false;
      }
      if (complete) {
        snap.torso_rotation = rotation;
        snap.timestamp = time;
        out = snap;
      }
    }
    prev_stance_ = stance;
    prev_feet_ = feet_body;
    has_prev_ = true;
    return out;
  }

 private:
  bool has_prev_ = false;
  std::array<bool, 4> prev_stance_{};
  std::array<Vec3, 4> prev_feet_{};
};

struct SlopeEstimatorConfig {
  bool low_pass = false;
  double low_pass_alpha = 0.5;  // weight of the newest normal
};

enum class EstimateStatus { Updated, Degenerate };

/// Keeps the latest support-plane estimate. Flat until the first exchange;
/// degenerate snapshots leave the previous estimate in place.
class SlopeEstimator {
 public:
  explicit SlopeEstimator(SlopeEstimatorConfig cfg = {}) : cfg_(cfg) {}

  void reset() {
    estimate_ = PlaneEstimate{};
    updates_ = 0;
    degenerate_ = 0;
  }

  EstimateStatus update(const ContactSnapshot& snapshot) {
    PlaneEstimate fresh;
    try {
      fresh = estimate_support_plane(snapshot);
    } catch (const DegenerateContacts&) {
      ++degenerate_;
      return EstimateStatus::Degenerate;
    }
    if (cfg_.low_pass && updates_ > 0)
      fresh = plane_from_normal((1.0 - cfg_.low_pass_alpha) * estimate_.normal + cfg_.low_pass_alpha * fresh.normal);
    estimate_ = fresh;
    ++updates_;
    return EstimateStatus::Updated;
  }

  const PlaneEstimate& estimate() const { return estimate_; }
  bool has_exchange() const { return updates_ > 0; }
  int degenerate_count() const { return degenerate_; }

 private:
  SlopeEstimatorConfig cfg_;
  PlaneEstimate estimate_{};
  int updates_ = 0;
  int degenerate_ = 0;
};

}  // namespace slopewalk
