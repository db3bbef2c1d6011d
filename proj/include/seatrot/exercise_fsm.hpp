#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include "seatrot/kinematics.hpp"

namespace seatrot {

enum class ExercisePhase : std::uint8_t {
  Neutral = 0,
  RotatingRight = 1,
  HoldingRight = 2,
  RotatingLeft = 3,
  HoldingLeft = 4,
  ReturningToNeutral = 5,
  Paused = 6,
  OverRotated = 7,
};

enum class Side : std::uint8_t { Right = 0, Left = 1 };

inline Side opposite(Side s) { return s == Side::Right ? Side::Left : Side::Right; }

// +1 for rightward rotation, -1 for leftward.
inline double side_sign(Side s) { return s == Side::Right ? 1.0 : -1.0; }

inline std::string_view to_string(Side s) {
  return s == Side::Right ? "right" : "left";
}

inline std::string_view to_string(ExercisePhase p) {
  switch (p) {
    case ExercisePhase::Neutral: return "Neutral";
    case ExercisePhase::RotatingRight: return "RotatingRight";
    case ExercisePhase::HoldingRight: return "HoldingRight";
    case ExercisePhase::RotatingLeft: return "RotatingLeft";
    case ExercisePhase::HoldingLeft: return "HoldingLeft";
    case ExercisePhase::ReturningToNeutral: return "ReturningToNeutral";
    case ExercisePhase::Paused: return "Paused";
    case ExercisePhase::OverRotated: return "OverRotated";
  }
  return "?";
}

inline bool is_holding(ExercisePhase p) {
  return p == ExercisePhase::HoldingRight || p == ExercisePhase::HoldingLeft;
}

inline bool is_rotating(ExercisePhase p) {
  return p == ExercisePhase::RotatingRight || p == ExercisePhase::RotatingLeft;
}

inline ExercisePhase rotating_phase(Side s) {
  return s == Side::Right ? ExercisePhase::RotatingRight : ExercisePhase::RotatingLeft;
}

inline ExercisePhase holding_phase(Side s) {
  return s == Side::Right ? ExercisePhase::HoldingRight : ExercisePhase::HoldingLeft;
}

struct ExerciseConfig {
  double safe_min_deg = 20.0;
  double safe_max_deg = 60.0;
  double excel_min_deg = 40.0;
  double excel_max_deg = 50.0;
  double hold_required_s = 2.0;
  double neutral_band_deg = 10.0;
  bool alternate_sides = true;
  // A posture fault episode is closed after this long without a fault.
  double fault_debounce_s = 1.0;

  void validate() const {
    if (!(0.0 < neutral_band_deg && neutral_band_deg < safe_min_deg &&
          safe_min_deg < excel_min_deg && excel_min_deg < excel_max_deg &&
          excel_max_deg < safe_max_deg)) {
      throw std::invalid_argument(
          "exercise thresholds must satisfy 0 < neutral_band < safe_min < "
          "excel_min < excel_max < safe_max");
    }
    if (!(hold_required_s >= 2.0 && hold_required_s <= 3.0)) {
      throw std::invalid_argument("hold_required_s must be within [2, 3]");
    }
    if (!(fault_debounce_s >= 0.0)) {
      throw std::invalid_argument("fault_debounce_s must be >= 0");
    }
  }

  friend bool operator==(const ExerciseConfig&, const ExerciseConfig&) = default;
};

struct RepRecord {
  int rep_id = 0;
  double angle = 0.0;          // peak |rotation| while the hold was counting
  double hold_duration = 0.0;  // seconds counted in range
  bool correct = false;
  bool excellent = false;
  Side side = Side::Right;

  friend bool operator==(const RepRecord&, const RepRecord&) = default;
};

// Events emitted by fsm_step, in emission order.
struct HoldComplete {
  Side side;
  double hold_elapsed_s;
};
struct RepComplete {
  RepRecord rep;
};
struct OverRotationFlag {
  Side side;
  double angle_deg;
};
struct PostureFaultEvent {
  PostureFault reason;
};
struct WrongSidePrompt {
  Side expected;
};
struct TrackingPaused {};

using FsmEvent = std::variant<HoldComplete, RepComplete, OverRotationFlag,
                              PostureFaultEvent, WrongSidePrompt, TrackingPaused>;

// Bookkeeping for the excursion currently in progress.
struct Excursion {
  Side side = Side::Right;
  double peak_deg = 0.0;
  double band_run_s = 0.0;       // current contiguous time inside the excellence band
  double best_band_run_s = 0.0;
  bool hold_complete = false;
  bool over_rotated = false;
  bool faulted = false;
  // Phase to resume once an over-rotation ends.
  ExercisePhase resume = ExercisePhase::Neutral;

  friend bool operator==(const Excursion&, const Excursion&) = default;
};

struct ExerciseState {
  ExercisePhase phase = ExercisePhase::Neutral;
  double current_angle_deg = 0.0;
  double hold_progress = 0.0;
  double hold_elapsed_s = 0.0;
  Side current_side = Side::Right;  // side expected for the next excursion
  int rep_count = 0;
  PostureStatus posture;

  Excursion excursion;
  bool wrong_side_active = false;
  bool fault_episode_open = false;
  double since_fault_s = std::numeric_limits<double>::infinity();

  friend bool operator==(const ExerciseState&, const ExerciseState&) = default;
};

struct FsmStep {
  ExerciseState state;
  std::vector<FsmEvent> events;
};

inline double hold_progress(double elapsed_s, double required_s) {
  return std::clamp(elapsed_s / required_s, 0.0, 1.0);
}

inline constexpr double kMaxStepSeconds = 0.5;

namespace detail {

class FsmStepper {
 public:
  FsmStepper(const ExerciseState& s, const ExerciseConfig& cfg)
      : s_(s), cfg_(cfg) {}

  FsmStep run(double angle, const PostureStatus& posture, double dt) {
    s_.current_angle_deg = angle;
    s_.posture = posture;
    const double mag = std::fabs(angle);

    if (s_.phase == ExercisePhase::Paused) {
      abandon();
    }
    if (s_.phase == ExercisePhase::OverRotated && mag <= cfg_.safe_max_deg) {
      s_.phase = s_.excursion.resume;
    }

    // Phase handlers may chain (Neutral -> Rotating -> Holding) within a step.
    for (int hop = 0; hop < 6; ++hop) {
      if (!handle(angle, mag, posture, dt)) break;
    }

    update_fault(posture, dt);
    s_.hold_progress = hold_progress(s_.hold_elapsed_s, cfg_.hold_required_s);
    return {std::move(s_), std::move(events_)};
  }

 private:
  // Returns true when the phase changed and the new phase should see the
  // same sample.
  bool handle(double angle, double mag, const PostureStatus& posture, double dt) {
    switch (s_.phase) {
      case ExercisePhase::Neutral: return neutral(angle, mag);
      case ExercisePhase::RotatingRight:
      case ExercisePhase::RotatingLeft: return rotating(angle, mag);
      case ExercisePhase::HoldingRight:
      case ExercisePhase::HoldingLeft: return holding(angle, mag, posture, dt);
      case ExercisePhase::ReturningToNeutral: return returning(angle, mag);
      case ExercisePhase::OverRotated:
      case ExercisePhase::Paused: return false;
    }
    return false;
  }

  bool neutral(double angle, double mag) {
    if (mag < cfg_.neutral_band_deg) {
      s_.wrong_side_active = false;
      return false;
    }
    const Side dir = angle > 0 ? Side::Right : Side::Left;
    if (cfg_.alternate_sides && dir != s_.current_side) {
      if (mag >= cfg_.safe_min_deg && !s_.wrong_side_active) {
        s_.wrong_side_active = true;
        events_.emplace_back(WrongSidePrompt{s_.current_side});
      }
      if (mag > cfg_.safe_max_deg) {
        over_rotate(angle, ExercisePhase::Neutral);
      }
      return false;
    }
    s_.wrong_side_active = false;
    s_.excursion = Excursion{};
    s_.excursion.side = dir;
    if (!cfg_.alternate_sides) s_.current_side = dir;
    s_.phase = rotating_phase(dir);
    return true;
  }

  bool rotating(double angle, double mag) {
    const double a = projected(angle);
    if (mag > cfg_.safe_max_deg) {
      over_rotate(angle, rotating_phase(s_.excursion.side));
      return false;
    }
    if (a >= cfg_.safe_min_deg) {
      s_.phase = holding_phase(s_.excursion.side);
      return true;
    }
    if (a < cfg_.neutral_band_deg) {
      abandon();
      return mag >= cfg_.neutral_band_deg;
    }
    return false;
  }

  bool holding(double angle, double mag, const PostureStatus& posture, double dt) {
    const double a = projected(angle);
    if (mag > cfg_.safe_max_deg) {
      over_rotate(angle, holding_phase(s_.excursion.side));
      return false;
    }
    if (a < cfg_.safe_min_deg) {
      s_.phase = ExercisePhase::ReturningToNeutral;
      return true;
    }
    if (!posture.ok()) return false;

    auto& ex = s_.excursion;
    s_.hold_elapsed_s += dt;
    ex.peak_deg = std::max(ex.peak_deg, a);
    if (a >= cfg_.excel_min_deg && a <= cfg_.excel_max_deg) {
      ex.band_run_s += dt;
      ex.best_band_run_s = std::max(ex.best_band_run_s, ex.band_run_s);
    } else {
      ex.band_run_s = 0.0;
    }
    if (!ex.hold_complete && s_.hold_elapsed_s >= cfg_.hold_required_s) {
      ex.hold_complete = true;
      events_.emplace_back(HoldComplete{ex.side, s_.hold_elapsed_s});
    }
    return false;
  }

  bool returning(double angle, double mag) {
    const double a = projected(angle);
    if (mag > cfg_.safe_max_deg) {
      over_rotate(angle, holding_phase(s_.excursion.side));
      return false;
    }
    if (a >= cfg_.safe_min_deg) {
      s_.phase = holding_phase(s_.excursion.side);
      return true;
    }
    if (mag < cfg_.neutral_band_deg) {
      if (s_.excursion.hold_complete) complete_rep();
      abandon();
      return false;
    }
    return false;
  }

  void complete_rep() {
    const auto& ex = s_.excursion;
    RepRecord rep;
    rep.rep_id = s_.rep_count + 1;
    rep.angle = ex.peak_deg;
    rep.hold_duration = s_.hold_elapsed_s;
    rep.side = ex.side;
    rep.correct = ex.hold_complete && !ex.over_rotated && !ex.faulted;
    rep.excellent = rep.correct && ex.best_band_run_s >= cfg_.hold_required_s &&
                    ex.peak_deg >= cfg_.excel_min_deg &&
                    ex.peak_deg <= cfg_.excel_max_deg;
    ++s_.rep_count;
    events_.emplace_back(RepComplete{rep});
    if (cfg_.alternate_sides) s_.current_side = opposite(ex.side);
  }

  void over_rotate(double angle, ExercisePhase resume) {
    s_.phase = ExercisePhase::OverRotated;
    s_.excursion.resume = resume;
    if (resume != ExercisePhase::Neutral) s_.excursion.over_rotated = true;
    s_.excursion.band_run_s = 0.0;
    events_.emplace_back(
        OverRotationFlag{angle > 0 ? Side::Right : Side::Left, angle});
  }

  void abandon() {
    s_.phase = ExercisePhase::Neutral;
    s_.hold_elapsed_s = 0.0;
    s_.excursion = Excursion{};
  }

  void update_fault(const PostureStatus& posture, double dt) {
    const bool active =
        s_.phase != ExercisePhase::Neutral && s_.phase != ExercisePhase::Paused;
    if (active && !posture.ok()) {
      s_.excursion.faulted = true;
      s_.excursion.band_run_s = 0.0;
      if (!s_.fault_episode_open) {
        s_.fault_episode_open = true;
        events_.emplace_back(PostureFaultEvent{*posture.fault_reason});
      }
      s_.since_fault_s = 0.0;
      return;
    }
    s_.since_fault_s += dt;
    if (s_.fault_episode_open && s_.since_fault_s >= cfg_.fault_debounce_s) {
      s_.fault_episode_open = false;
    }
  }

  double projected(double angle) const {
    return angle * side_sign(s_.excursion.side);
  }

  ExerciseState s_;
  const ExerciseConfig& cfg_;
  std::vector<FsmEvent> events_;
};

}  // namespace detail

/// Advances the exercise state machine by one sample. `dt` must be in
/// (0, kMaxStepSeconds]; longer gaps go through fsm_pause first.
inline FsmStep fsm_step(const ExerciseState& state, double angle_deg,
                        const PostureStatus& posture, double dt,
                        const ExerciseConfig& cfg) {
  if (!(dt > 0.0 && dt <= kMaxStepSeconds)) {
    throw std::invalid_argument("fsm_step: dt must be in (0, 0.5] seconds");
  }
  return detail::FsmStepper(state, cfg).run(angle_deg, posture, dt);
}

/// Enters Paused after tracking was lost for too long. The excursion in
/// progress is abandoned; the expected side and rep count are kept.
inline FsmStep fsm_pause(const ExerciseState& state) {
  FsmStep out{state, {}};
  if (state.phase == ExercisePhase::Paused) return out;
  auto& s = out.state;
  s.phase = ExercisePhase::Paused;
  s.hold_elapsed_s = 0.0;
  s.hold_progress = 0.0;
  s.excursion = Excursion{};
  s.wrong_side_active = false;
  out.events.emplace_back(TrackingPaused{});
  return out;
}

}  // namespace seatrot
