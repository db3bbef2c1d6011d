#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "seatrot/pose_model.hpp"

namespace seatrot {

class DegenerateVector : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDegenerateLength = 1e-6;

inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }
inline double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }

/// Wraps any angle into (-180, 180].
inline double normalize_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r <= -180.0) r += 360.0;
  if (r > 180.0) r -= 360.0;
  return r;
}

enum class PostureFault { NotSeated, ShoulderPelvisMisaligned };

inline std::string_view to_string(PostureFault f) {
  return f == PostureFault::NotSeated ? "not_seated" : "misaligned";
}

struct PostureStatus {
  bool is_seated = true;
  bool is_aligned = true;
  std::optional<PostureFault> fault_reason;

  bool ok() const { return !fault_reason.has_value(); }
  friend bool operator==(const PostureStatus&, const PostureStatus&) = default;
};

struct PostureConfig {
  double seated_max = 0.55;
  double tilt_max_deg = 15.0;

  void validate() const {
    if (!(seated_max > 0.0)) throw std::invalid_argument("seated_max must be > 0");
    if (!(tilt_max_deg > 0.0 && tilt_max_deg <= 90.0)) {
      throw std::invalid_argument("tilt_max_deg must be in (0, 90]");
    }
  }
};

struct TorsoMeasurement {
  double rotation_deg = 0.0;
  double shoulder_hip_tilt_deg = 0.0;
  double seated_ratio = 0.0;
};

namespace detail {

struct Vec2 {
  double a;
  double b;
  double norm() const { return std::hypot(a, b); }
};

inline Vec2 segment_xz(const Landmark& from, const Landmark& to) {
  return {to.x - from.x, to.z - from.z};
}

inline Vec2 segment_xy(const Landmark& from, const Landmark& to) {
  return {to.x - from.x, to.y - from.y};
}

inline void require_length(const Vec2& v, const char* what) {
  if (v.norm() < kDegenerateLength) throw DegenerateVector(what);
}

// Inclination of an undirected image-plane segment, in (-90, 90].
inline double line_inclination_deg(const Vec2& v) {
  double deg = rad_to_deg(std::atan2(v.b, v.a));
  if (deg > 90.0) deg -= 180.0;
  if (deg <= -90.0) deg += 180.0;
  return deg;
}

}  // namespace detail

/// Signed yaw of the shoulder line relative to the hip line in the (x, z)
/// plane. Positive means the subject turned to their right, i.e. the right
/// shoulder moved toward the camera.
inline double torso_rotation_deg(const PoseFrame& frame) {
  using namespace skeleton;
  const auto s = detail::segment_xz(frame[kLeftShoulder], frame[kRightShoulder]);
  const auto h = detail::segment_xz(frame[kLeftHip], frame[kRightHip]);
  detail::require_length(s, "shoulder segment is degenerate in the x-z plane");
  detail::require_length(h, "hip segment is degenerate in the x-z plane");
  return normalize_deg(rad_to_deg(std::atan2(s.b, s.a)) -
                       rad_to_deg(std::atan2(h.b, h.a)));
}

/// Absolute image-plane angle between the shoulder and hip lines, in [0, 90].
inline double shoulder_pelvis_tilt_deg(const PoseFrame& frame) {
  using namespace skeleton;
  const auto s = detail::segment_xy(frame[kLeftShoulder], frame[kRightShoulder]);
  const auto h = detail::segment_xy(frame[kLeftHip], frame[kRightHip]);
  detail::require_length(s, "shoulder segment is degenerate in the image plane");
  detail::require_length(h, "hip segment is degenerate in the image plane");
  double d = std::fabs(detail::line_inclination_deg(s) -
                       detail::line_inclination_deg(h));
  if (d > 90.0) d = 180.0 - d;
  return d;
}

/// Vertical hip-to-knee offset divided by torso length. Small values mean the
/// knees sit near hip height (seated), large values mean standing.
inline double seated_ratio(const PoseFrame& frame) {
  using namespace skeleton;
  const double hip_x = 0.5 * (frame[kLeftHip].x + frame[kRightHip].x);
  const double hip_y = 0.5 * (frame[kLeftHip].y + frame[kRightHip].y);
  const double sh_x = 0.5 * (frame[kLeftShoulder].x + frame[kRightShoulder].x);
  const double sh_y = 0.5 * (frame[kLeftShoulder].y + frame[kRightShoulder].y);
  const double knee_y = 0.5 * (frame[kLeftKnee].y + frame[kRightKnee].y);
  const double torso = std::hypot(sh_x - hip_x, sh_y - hip_y);
  if (torso < kDegenerateLength) throw DegenerateVector("torso length is zero");
  return (knee_y - hip_y) / torso;
}

inline PostureStatus classify_posture(double ratio, double tilt_deg,
                                      const PostureConfig& cfg) {
  PostureStatus st;
  st.is_seated = ratio < cfg.seated_max;
  st.is_aligned = tilt_deg < cfg.tilt_max_deg;
  if (!st.is_seated) {
    st.fault_reason = PostureFault::NotSeated;
  } else if (!st.is_aligned) {
    st.fault_reason = PostureFault::ShoulderPelvisMisaligned;
  }
  return st;
}

inline PostureStatus classify_posture(const PoseFrame& frame,
                                      const PostureConfig& cfg) {
  return classify_posture(seated_ratio(frame), shoulder_pelvis_tilt_deg(frame),
                          cfg);
}

inline TorsoMeasurement measure_torso(const PoseFrame& frame) {
  return {torso_rotation_deg(frame), shoulder_pelvis_tilt_deg(frame),
          seated_ratio(frame)};
}

}  // namespace seatrot
