#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace slopewalk {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kGravity = 9.81;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Leg order used everywhere: actions, hip mounts, contact arrays.
enum class Leg : int { FL = 0, FR = 1, BL = 2, BR = 3 };
inline constexpr std::array<Leg, 4> kLegs{Leg::FL, Leg::FR, Leg::BL, Leg::BR};
inline constexpr int index(Leg leg) { return static_cast<int>(leg); }

inline const char* leg_name(Leg leg) {
  switch (leg) {
    case Leg::FL: return "FL";
    case Leg::FR: return "FR";
    case Leg::BL: return "BL";
    case Leg::BR: return "BR";
  }
  return "?";
}

// Error hierarchy. Recoverable conditions (degenerate plane fits, degenerate
// ARS returns, rank deficient fits) are reported through flags instead.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error { using Error::Error; };
struct Unreachable : Error { using Error::Error; };
struct JointLimitViolation : Error { using Error::Error; };
struct WorkspaceViolation : Error { using Error::Error; };
struct DegenerateContacts : Error { using Error::Error; };
struct InvalidWidth : Error { using Error::Error; };
struct NotReset : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };

/// splitmix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive combination of seed components into one stream seed.
inline constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

/// Seeded random stream. Distributions are computed here rather than through
/// <random> distribution objects so that streams are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

  bool operator==(const Rng& other) const {
    return engine_ == other.engine_ && has_spare_ == other.has_spare_ && spare_ == other.spare_;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Torso attitude: roll and pitch describe the tilt of the body z-axis
/// (same extraction as the support plane), yaw the heading of the body x-axis.
struct Attitude {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  bool operator==(const Attitude&) const = default;
};

/// roll = atan2(n_y, n_z), pitch = -asin(n_x) for an up-facing unit vector n.
inline double tilt_roll(const Vec3& n) { return std::atan2(n.y(), n.z()); }
inline double tilt_pitch(const Vec3& n) { return -std::asin(std::clamp(n.x(), -1.0, 1.0)); }

inline Attitude attitude_of(const Mat3& rotation) {
  const Vec3 up = rotation.col(2);
  return {tilt_roll(up), tilt_pitch(up), std::atan2(rotation(1, 0), rotation(0, 0))};
}

/// Rotation whose body z-axis is `normal` and whose body x-axis lies in the
/// world x-z plane (zero heading).
inline Mat3 aligned_rotation(const Vec3& normal) {
  const Vec3 z = normal.normalized();
  Vec3 x(z.z(), 0.0, -z.x());
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

}  // namespace slopewalk
