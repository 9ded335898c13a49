#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slopewalk/common.hpp"
#include "slopewalk/gaitgen.hpp"
#include "slopewalk/slopeest.hpp"

namespace slopewalk {

inline constexpr int kObsDim = 11;
inline constexpr int kActDim = 20;
inline constexpr int kParamDim = kObsDim * kActDim;

using Observation = Eigen::Matrix<double, kObsDim, 1>;
using RawAction = Eigen::Matrix<double, kActDim, 1>;
using PolicyMatrix = Eigen::Matrix<double, kActDim, kObsDim, Eigen::RowMajor>;

/// Per-leg actions in leg order FL, FR, BL, BR.
using ActionVector = std::array<LegAction, 4>;

/// Channel order inside each leg's block of five raw outputs.
enum class Channel : int { StepLength = 0, Steer = 1, ShiftX = 2, ShiftY = 3, ShiftZ = 4 };
inline constexpr int raw_index(Leg leg, Channel c) { return 5 * index(leg) + static_cast<int>(c); }

/// Three most recent policy-step attitudes, oldest first.
class AttitudeHistory {
 public:
  void clear() { count_ = 0; }

  void fill(const Attitude& a) {
    buf_.fill(a);
    count_ = 3;
  }

  void push(const Attitude& a) {
    buf_[0] = buf_[1];
    buf_[1] = buf_[2];
    buf_[2] = a;
    count_ = std::min(count_ + 1, 3);
  }

  int size() const { return count_; }

  /// Entry `age` steps back (0 = newest). Missing older samples repeat the
  /// oldest available one.
  const Attitude& back(int age) const {
    if (count_ == 0) throw std::logic_error("attitude history is empty");
    age = std::min(age, count_ - 1);
    return buf_[2 - age];
  }

 private:
  std::array<Attitude, 3> buf_{};
  int count_ = 0;
};

/// [Θ(t-2), Θ(t-1), Θ(t), plane roll, plane pitch].
inline Observation build_observation(const AttitudeHistory& history, const PlaneEstimate& plane) {
  Observation s;
  for (int k = 0; k < 3; ++k) {
    const Attitude& a = history.back(2 - k);
    s(3 * k + 0) = a.roll;
    s(3 * k + 1) = a.pitch;
    s(3 * k + 2) = a.yaw;
  }
  s(9) = plane.roll;
  s(10) = plane.pitch;
  return s;
}

inline RawAction act(const PolicyMatrix& m, const Observation& s) {
  RawAction out;
  for (int r = 0; r < kActDim; ++r) {
    double acc = 0.0;
    for (int c = 0; c < kObsDim; ++c) acc += m(r, c) * s(c);
    out(r) = acc;
  }
  return out;
}

struct ChannelRange {
  double lo = 0.0;
  double hi = 0.0;
  double from_unit(double u) const { return lo + 0.5 * (u + 1.0) * (hi - lo); }
  double to_unit(double v) const { return 2.0 * (v - lo) / (hi - lo) - 1.0; }
};

/// Physical range each clamped raw output in [-1, 1] is mapped onto.
struct ActionRanges {
  ChannelRange step_len{0.0, 0.136};
  ChannelRange steer{-0.35, 0.35};
  ChannelRange shift_x{-0.06, 0.06};
  ChannelRange shift_y{-0.035, 0.035};
  ChannelRange shift_z{-0.06, 0.06};

  const ChannelRange& operator[](Channel c) const {
    switch (c) {
      case Channel::StepLength: return step_len;
      case Channel::Steer: return steer;
      case Channel::ShiftX: return shift_x;
      case Channel::ShiftY: return shift_y;
      case Channel::ShiftZ: return shift_z;
    }
    return step_len;
  }

  void validate() const {
    for (Channel c : {Channel::StepLength, Channel::Steer, Channel::ShiftX, Channel::ShiftY, Channel::ShiftZ})
      if (!((*this)[c].hi > (*this)[c].lo)) throw ConfigError("action range upper bound must exceed lower bound");
    if (step_len.lo < 0.0) throw ConfigError("step length range must be non-negative");
  }
};

inline ActionVector scale_clip_action(const RawAction& raw, const ActionRanges& ranges = {}) {
  ActionVector out;
  for (Leg leg : kLegs) {
    auto unit = [&](Channel c) { return std::clamp(raw(raw_index(leg, c)), -1.0, 1.0); };
    LegAction& a = out[index(leg)];
    a.step_len = ranges.step_len.from_unit(unit(Channel::StepLength));
    a.steer = ranges.steer.from_unit(unit(Channel::Steer));
    a.shift_x = ranges.shift_x.from_unit(unit(Channel::ShiftX));
    a.shift_y = ranges.shift_y.from_unit(unit(Channel::ShiftY));
    a.shift_z = ranges.shift_z.from_unit(unit(Channel::ShiftZ));
  }
  return out;
}

/// Inverse of the affine part of scale_clip_action.
inline RawAction unscale_action(const ActionVector& a, const ActionRanges& ranges = {}) {
  RawAction raw;
  for (Leg leg : kLegs) {
    const LegAction& la = a[index(leg)];
    raw(raw_index(leg, Channel::StepLength)) = ranges.step_len.to_unit(la.step_len);
    raw(raw_index(leg, Channel::Steer)) = ranges.steer.to_unit(la.steer);
    raw(raw_index(leg, Channel::ShiftX)) = ranges.shift_x.to_unit(la.shift_x);
    raw(raw_index(leg, Channel::ShiftY)) = ranges.shift_y.to_unit(la.shift_y);
    raw(raw_index(leg, Channel::ShiftZ)) = ranges.shift_z.to_unit(la.shift_z);
  }
  return raw;
}

inline Eigen::VectorXd flatten(const PolicyMatrix& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), kParamDim);
}

inline PolicyMatrix unflatten(const Eigen::VectorXd& theta) {
  if (theta.size() != kParamDim) throw std::invalid_argument("parameter vector must have 220 entries");
  return Eigen::Map<const PolicyMatrix>(theta.data());
}

// Policy file: "20 11" header, one row per line, then optional '#' lines.

inline std::string format_policy(const PolicyMatrix& m, const std::vector<std::string>& comments = {}) {
  std::string out = "20 11\n";
  char buf[40];
  for (int r = 0; r < kActDim; ++r) {
    for (int c = 0; c < kObsDim; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      if (c) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  for (const auto& line : comments) out += "# " + line + "\n";
  return out;
}

inline PolicyMatrix parse_policy(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> rows;
  bool header = false;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (!header) {
      std::istringstream h(line);
      int r = 0, c = 0;
      std::string extra;
      if (!(h >> r >> c) || (h >> extra) || r != kActDim || c != kObsDim)
        throw FormatError("policy header must be \"20 11\", got \"" + line + "\"");
      header = true;
      continue;
    }
    rows.push_back(line);
  }
  if (!header) throw FormatError("policy file is empty");
  if (rows.size() != kActDim) throw FormatError("policy file must contain 20 rows");
  PolicyMatrix m;
  for (int r = 0; r < kActDim; ++r) {
    const std::string& row = rows[r];
    const char* p = row.data();
    const char* end = row.data() + row.size();
    int c = 0;
    while (true) {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
      if (p == end) break;
      if (c == kObsDim) throw FormatError("policy row " + std::to_string(r + 1) + " has too many columns");
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || !std::isfinite(v))
        throw FormatError("bad number in policy row " + std::to_string(r + 1));
      m(r, c++) = v;
      p = next;
    }
    if (c != kObsDim) throw FormatError("policy row " + std::to_string(r + 1) + " must have 11 columns");
  }
  return m;
}

inline void save_policy(const PolicyMatrix& m, const std::filesystem::path& path,
                        const std::vector<std::string>& comments = {}) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write policy file " + path.string());
  out << format_policy(m, comments);
  if (!out) throw IoFailure("failed writing policy file " + path.string());
}

inline PolicyMatrix load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read policy file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_policy(ss.str());
}

}  // namespace slopewalk
