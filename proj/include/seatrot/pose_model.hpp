#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace seatrot {

inline constexpr std::size_t kLandmarkCount = 33;

// Indices into the standard 33-point body topology.
namespace skeleton {
inline constexpr std::size_t kLeftShoulder = 11;
inline constexpr std::size_t kRightShoulder = 12;
inline constexpr std::size_t kLeftHip = 23;
inline constexpr std::size_t kRightHip = 24;
inline constexpr std::size_t kLeftKnee = 25;
inline constexpr std::size_t kRightKnee = 26;

// The landmarks the seated rotation exercise depends on.
inline constexpr std::array<std::size_t, 6> kTracked = {
    kLeftShoulder, kRightShoulder, kLeftHip, kRightHip, kLeftKnee, kRightKnee};

constexpr bool is_tracked(std::size_t index) {
  for (auto i : kTracked) {
    if (i == index) return true;
  }
  return false;
}
}  // namespace skeleton

inline constexpr double kDefaultVisibilityThreshold = 0.9;

/// One keypoint in normalized image space. x grows left to right, y grows
/// top to bottom, z is relative depth (negative toward the camera).
struct Landmark {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double visibility = 0.0;

  friend bool operator==(const Landmark&, const Landmark&) = default;
};

struct PoseFrame {
  std::uint64_t timestamp_us = 0;
  std::uint32_t seq = 0;
  std::array<Landmark, kLandmarkCount> landmarks{};

  const Landmark& operator[](std::size_t i) const { return landmarks[i]; }
  Landmark& operator[](std::size_t i) { return landmarks[i]; }

  friend bool operator==(const PoseFrame&, const PoseFrame&) = default;
};

inline bool landmark_is_well_formed(const Landmark& lm) {
  return std::isfinite(lm.x) && std::isfinite(lm.y) && std::isfinite(lm.z) &&
         std::isfinite(lm.visibility) && lm.visibility >= 0.0 &&
         lm.visibility <= 1.0;
}

inline bool frame_is_well_formed(const PoseFrame& frame) {
  for (const auto& lm : frame.landmarks) {
    if (!landmark_is_well_formed(lm)) return false;
  }
  return true;
}

/// True iff every tracked landmark is seen with visibility strictly above
/// `tau`. Landmarks outside the tracked set never affect the result.
inline bool frame_is_trackable(const PoseFrame& frame,
                               double tau = kDefaultVisibilityThreshold) {
  for (auto i : skeleton::kTracked) {
    if (!(frame[i].visibility > tau)) return false;
  }
  return true;
}

}  // namespace seatrot
