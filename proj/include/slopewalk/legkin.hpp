#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "slopewalk/common.hpp"

namespace slopewalk {

struct JointRange {
  double min = 0.0;
  double max = 0.0;
  bool contains(double v) const { return v >= min && v <= max; }
  double clamp(double v) const { return std::clamp(v, min, max); }
};

/// Serial equivalent of one leg: abduction about the leg-frame x-axis followed
/// by a planar hip/knee pair. The hip angle is measured from the downward
/// vertical (positive swings the foot forward), the knee relative to the upper
/// link. The knee always flexes backward (knee <= 0).
struct LegGeometry {
  double upper_link_len = 0.15;
  double lower_link_len = 0.175;
  double abduction_offset = 0.0;
  std::array<Vec3, 4> hip_positions_body{Vec3(0.2, 0.14, 0.0), Vec3(0.2, -0.14, 0.0),
                                         Vec3(-0.2, 0.14, 0.0), Vec3(-0.2, -0.14, 0.0)};
  JointRange abd_limits{-0.6, 0.6};
  JointRange hip_limits{-0.3, 1.5};
  JointRange knee_limits{-2.05, 0.0};
  /// Safe planar (x, z) region, ordered vertices.
  std::vector<Vec2> workspace_polygon{Vec2(-0.05, -0.18), Vec2(0.05, -0.18), Vec2(0.11, -0.30),
                                      Vec2(-0.11, -0.30)};

  double total_length() const { return upper_link_len + lower_link_len; }
  void validate() const;
};

struct LegJointAngles {
  double abd = 0.0;
  double hip = 0.0;
  double knee = 0.0;
  bool operator==(const LegJointAngles&) const = default;
};

/// Leg-frame foot position: origin at the hip mount, x forward, z up (feet
/// below the hip have negative z).
using FootPosition = Vec3;

inline FootPosition forward_kinematics(const LegJointAngles& q, const LegGeometry& g) {
  const double l1 = g.upper_link_len;
  const double l2 = g.lower_link_len;
  const double px = l1 * std::sin(q.hip) + l2 * std::sin(q.hip + q.knee);
  const double pz = -l1 * std::cos(q.hip) - l2 * std::cos(q.hip + q.knee);
  const double ca = std::cos(q.abd);
  const double sa = std::sin(q.abd);
  const double d = g.abduction_offset;
  return {px, d * ca - pz * sa, d * sa + pz * ca};
}

/// Foot position split into the abduction angle and the point in the
/// hip/knee plane.
struct PlanarDecomposition {
  double abd = 0.0;
  Vec2 planar = Vec2::Zero();  // (x, z), z <= 0
};

inline std::optional<PlanarDecomposition> decompose(const FootPosition& p, const LegGeometry& g) {
  const double d = g.abduction_offset;
  const double r2 = p.y() * p.y() + p.z() * p.z() - d * d;
  if (r2 < 0.0) return std::nullopt;
  const double zp = -std::sqrt(r2);
  double abd = std::atan2(p.z(), p.y()) - std::atan2(zp, d);
  if (abd > kPi) abd -= 2.0 * kPi;
  if (abd <= -kPi) abd += 2.0 * kPi;
  return PlanarDecomposition{abd, Vec2(p.x(), zp)};
}

inline FootPosition recompose(const PlanarDecomposition& dec, const LegGeometry& g) {
  const double ca = std::cos(dec.abd);
  const double sa = std::sin(dec.abd);
  const double d = g.abduction_offset;
  const double zp = dec.planar.y();
  return {dec.planar.x(), d * ca - zp * sa, d * sa + zp * ca};
}

namespace detail {

enum class IkStatus { Ok, Unreachable, JointLimit };

struct IkSolution {
  LegJointAngles angles;
  IkStatus status = IkStatus::Ok;
};

inline IkSolution solve_ik(const FootPosition& p, const LegGeometry& g) {
  const auto dec = decompose(p, g);
  if (!dec) return {{}, IkStatus::Unreachable};
  const double l1 = g.upper_link_len;
  const double l2 = g.lower_link_len;
  const double x = dec->planar.x();
  const double z = dec->planar.y();
  const double dist2 = x * x + z * z;
  const double dist = std::sqrt(dist2);
  constexpr double kSlack = 1e-12;
  if (dist > l1 + l2 + kSlack || dist < std::abs(l1 - l2) - kSlack) return {{}, IkStatus::Unreachable};
  const double c = std::clamp((dist2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  const double knee = -std::acos(c);
  const double hip = std::atan2(x, -z) - std::atan2(l2 * std::sin(knee), l1 + l2 * std::cos(knee));
  IkSolution sol{{dec->abd, hip, knee}, IkStatus::Ok};
  if (!g.abd_limits.contains(sol.angles.abd) || !g.hip_limits.contains(sol.angles.hip) ||
      !g.knee_limits.contains(sol.angles.knee))
    sol.status = IkStatus::JointLimit;
  return sol;
}

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline Vec2 closest_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return a + t * ab;
}

}  // namespace detail

inline LegJointAngles inverse_kinematics(const FootPosition& p, const LegGeometry& g) {
  const auto sol = detail::solve_ik(p, g);
  switch (sol.status) {
    case detail::IkStatus::Unreachable:
      throw Unreachable("foot target outside the reachable annulus");
    case detail::IkStatus::JointLimit:
      throw JointLimitViolation("inverse kinematics solution violates joint limits");
    case detail::IkStatus::Ok:
      break;
  }
  return sol.angles;
}

/// Boundary-inclusive point-in-convex-polygon test, either vertex orientation.
inline bool point_in_convex_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  constexpr double kTol = 1e-12;
  bool has_pos = false;
  bool has_neg = false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const double c = detail::cross2(b - a, p - a);
    if (c > kTol) has_pos = true;
    if (c < -kTol) has_neg = true;
    if (has_pos && has_neg) return false;
  }
  return true;
}

inline bool in_workspace(const FootPosition& p, const LegGeometry& g) {
  const auto dec = decompose(p, g);
  return dec && point_in_convex_polygon(dec->planar, g.workspace_polygon);
}

/// Projects the planar part of a target onto the workspace polygon, keeping
/// the abduction angle. Targets already inside are returned unchanged.
inline FootPosition clamp_to_workspace(const FootPosition& p, const LegGeometry& g) {
  auto dec = decompose(p, g);
  if (!dec) dec = PlanarDecomposition{0.0, Vec2(p.x(), p.z())};
  const auto& poly = g.workspace_polygon;
  if (point_in_convex_polygon(dec->planar, poly)) return p;
  Vec2 best = poly.front();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 c = detail::closest_on_segment(dec->planar, poly[i], poly[(i + 1) % poly.size()]);
    const double d2 = (c - dec->planar).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
    }
  }
  dec->planar = best;
  return recompose(*dec, g);
}

inline Vec2 polygon_centroid(const std::vector<Vec2>& poly) {
  double area2 = 0.0;
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    const double w = detail::cross2(a, b);
    area2 += w;
    c += w * (a + b);
  }
  return c / (3.0 * area2);
}

inline void LegGeometry::validate() const {
  if (!(upper_link_len > 0.0) || !(lower_link_len > 0.0))
    throw ConfigError("leg link lengths must be positive");
  if (abd_limits.min > abd_limits.max || hip_limits.min > hip_limits.max || knee_limits.min > knee_limits.max)
    throw ConfigError("joint limit ranges must satisfy min <= max");
  if (workspace_polygon.size() < 3) throw ConfigError("workspace polygon needs at least 3 vertices");
  int sign = 0;
  double area2 = 0.0;
  const auto n = workspace_polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = workspace_polygon[i];
    const Vec2& b = workspace_polygon[(i + 1) % n];
    const Vec2& c = workspace_polygon[(i + 2) % n];
    area2 += detail::cross2(a, b);
    const double turn = detail::cross2(b - a, c - b);
    if (std::abs(turn) < 1e-15) continue;
    const int s = turn > 0 ? 1 : -1;
    if (sign != 0 && s != sign) throw ConfigError("workspace polygon is not convex");
    sign = s;
  }
  if (std::abs(area2) < 1e-12) throw ConfigError("workspace polygon is degenerate");
  for (const Vec2& v : workspace_polygon) {
    if (v.norm() > total_length() + 1e-12)
      throw ConfigError("workspace vertex beyond total leg length");
    if (v.norm() < std::abs(upper_link_len - lower_link_len) - 1e-12)
      throw ConfigError("workspace vertex inside the inner reach limit");
  }
}

}  // namespace slopewalk
