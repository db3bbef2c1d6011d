#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>

#include "seatrot/pose_model.hpp"

namespace seatrot {

struct SmootherConfig {
  double alpha = 0.3;
  double tau = kDefaultVisibilityThreshold;
  // Consecutive untrackable frames tolerated before the stream is paused.
  std::uint32_t dropout_limit = 30;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw std::invalid_argument("smoothing alpha must be in (0, 1]");
    }
    if (!(tau >= 0.0 && tau <= 1.0)) {
      throw std::invalid_argument("visibility threshold must be in [0, 1]");
    }
  }
};

struct SmootherState {
  std::optional<PoseFrame> last_smoothed;
  std::optional<PoseFrame> last_good;
  std::uint32_t dropout_count = 0;

  friend bool operator==(const SmootherState&, const SmootherState&) = default;
};

struct ConditionedFrame {
  PoseFrame pose;
};

struct Dropout {
  // Most recent conditioned frame, if any frame was ever accepted.
  std::optional<PoseFrame> held;
  std::uint32_t count = 0;
  // Set once `count` exceeds the configured limit; consumers must pause.
  bool exhausted = false;
};

using ConditionResult = std::variant<ConditionedFrame, Dropout>;

constexpr double ema_update(double prev, double x, double alpha) {
  return alpha * x + (1.0 - alpha) * prev;
}

/// Gates `frame` on visibility and smooths x, y, z of all landmarks.
/// Visibility passes through untouched. Dropouts leave the EMA memory alone.
inline std::pair<SmootherState, ConditionResult> condition_frame(
    SmootherState state, const PoseFrame& frame, const SmootherConfig& cfg) {
  if (!frame_is_trackable(frame, cfg.tau)) {
    ++state.dropout_count;
    Dropout d{state.last_good, state.dropout_count,
              state.dropout_count > cfg.dropout_limit};
    return {std::move(state), ConditionResult{std::move(d)}};
  }

  PoseFrame out = frame;
  // After an exhausted dropout the old memory describes a stale pose, so the
  // stream restarts from the incoming frame.
  const bool restart = state.dropout_count > cfg.dropout_limit;
  if (state.last_smoothed && !restart) {
    const auto& prev = *state.last_smoothed;
    for (std::size_t i = 0; i < kLandmarkCount; ++i) {
      out[i].x = ema_update(prev[i].x, frame[i].x, cfg.alpha);
      out[i].y = ema_update(prev[i].y, frame[i].y, cfg.alpha);
      out[i].z = ema_update(prev[i].z, frame[i].z, cfg.alpha);
    }
  }
  state.last_smoothed = out;
  state.last_good = out;
  state.dropout_count = 0;
  return {std::move(state), ConditionResult{ConditionedFrame{std::move(out)}}};
}

/// Per-stream owner of a SmootherState.
class Smoother {
 public:
  explicit Smoother(SmootherConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  ConditionResult condition(const PoseFrame& frame) {
    auto [next, result] = condition_frame(std::move(state_), frame, cfg_);
    state_ = std::move(next);
    return result;
  }

  const SmootherState& state() const { return state_; }
  const SmootherConfig& config() const { return cfg_; }
  void reset() { state_ = {}; }

 private:
  SmootherConfig cfg_;
  SmootherState state_;
};

}  // namespace seatrot
