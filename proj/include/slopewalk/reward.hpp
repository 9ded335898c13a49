#pragma once

#include <deque>

#include "slopewalk/common.hpp"

namespace slopewalk {

struct RewardWeights {
  double w_roll = 40.0;
  double w_pitch = 40.0;
  double w_yaw = 20.0;
  double w_height = 800.0;
  double forward = 1.5;           // W
  double standing_penalty = 1.0;  // S_P
  double desired_yaw = 0.0;
  double desired_height = 0.243;

  void validate() const {
    if (!(w_roll > 0.0) || !(w_pitch > 0.0) || !(w_yaw > 0.0) || !(w_height > 0.0))
      throw ConfigError("reward kernel widths must be positive");
    if (standing_penalty < 0.0) throw ConfigError("standing penalty must be non-negative");
  }
};

struct RewardInputs {
  double torso_roll = 0.0;
  double torso_pitch = 0.0;
  double torso_yaw = 0.0;
  double plane_roll = 0.0;
  double plane_pitch = 0.0;
  double height = 0.0;
  double dx = 0.0;
  bool standing = false;
};

inline double gaussian_kernel(double w, double x) {
  if (!(w > 0.0)) throw InvalidWidth("Gaussian kernel width must be positive");
  return std::exp(-w * x * x);
}

inline double compute_reward(const RewardInputs& in, const RewardWeights& wt, double max_step) {
  if (!(max_step > 0.0)) throw std::invalid_argument("max_step must be positive");
  double r = gaussian_kernel(wt.w_roll, in.torso_roll - in.plane_roll) +
             gaussian_kernel(wt.w_pitch, in.torso_pitch - in.plane_pitch) +
             gaussian_kernel(wt.w_yaw, in.torso_yaw - wt.desired_yaw) +
             gaussian_kernel(wt.w_height, in.height - wt.desired_height);
  r += wt.forward * (in.dx / max_step);
  if (in.standing) r -= wt.standing_penalty;
  return r;
}

/// Flags "standing" once the last `window` displacements sum to less than
/// `threshold` metres.
class StandingDetector {
 public:
  explicit StandingDetector(int window = 50, double threshold = 0.02) : window_(window), threshold_(threshold) {}

  void reset() {
    recent_.clear();
    sum_ = 0.0;
  }

  bool push(double dx) {
    recent_.push_back(dx);
    sum_ += dx;
    if (static_cast<int>(recent_.size()) > window_) {
      sum_ -= recent_.front();
      recent_.pop_front();
    }
    return static_cast<int>(recent_.size()) == window_ && std::abs(sum_) < threshold_;
  }

 private:
  int window_;
  double threshold_;
  std::deque<double> recent_;
  double sum_ = 0.0;
};

}  // namespace slopewalk
