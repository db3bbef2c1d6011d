#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "seatrot/exercise_fsm.hpp"

namespace seatrot {

// Stable on-wire prompt identifiers. Never renumber.
enum class PromptCode : std::uint16_t {
  None = 0,
  RotateMoreRight = 1,
  RotateMoreLeft = 2,
  PerfectRight = 3,
  PerfectLeft = 4,
  EaseBack = 5,
  GoodPosition = 6,
  HoldSteady = 7,
  ReturnToCenter = 8,
  SitUpright = 9,
  AlignShoulders = 10,
  SwitchToRight = 11,
  SwitchToLeft = 12,
  TrackingLost = 13,
  RepComplete = 14,
  ExcellentForm = 15,
  PerfectStreak = 16,
  AchievementUnlocked = 17,
  RepNotCounted = 18,
};

inline constexpr std::uint16_t kMaxPromptCode = 18;

enum class AudioCue : std::uint8_t {
  None = 0,
  PositiveChime = 1,
  RewardCoin = 2,
  GuidingTone = 3,
  CompletionBeep = 4,
  Fanfare = 5,
};

inline std::string_view to_string(AudioCue c) {
  switch (c) {
    case AudioCue::None: return "none";
    case AudioCue::PositiveChime: return "positive_chime";
    case AudioCue::RewardCoin: return "reward_coin";
    case AudioCue::GuidingTone: return "guiding_tone";
    case AudioCue::CompletionBeep: return "completion_beep";
    case AudioCue::Fanfare: return "fanfare";
  }
  return "?";
}

struct PromptInfo {
  PromptCode code;
  std::string_view key;
  std::string_view default_text;
};

inline constexpr PromptInfo kPromptTable[] = {
    {PromptCode::None, "NONE", ""},
    {PromptCode::RotateMoreRight, "ROTATE_MORE_RIGHT", "Rotate more to the right →"},
    {PromptCode::RotateMoreLeft, "ROTATE_MORE_LEFT", "← Rotate more to the left"},
    {PromptCode::PerfectRight, "PERFECT_RIGHT", "Perfect RIGHT rotation!"},
    {PromptCode::PerfectLeft, "PERFECT_LEFT", "Perfect LEFT rotation!"},
    {PromptCode::EaseBack, "EASE_BACK", "Too far! Ease back toward the center"},
    {PromptCode::GoodPosition, "GOOD_POSITION", "Good position; rotate more"},
    {PromptCode::HoldSteady, "HOLD_STEADY", "Hold it steady"},
    {PromptCode::ReturnToCenter, "RETURN_TO_CENTER", "Return slowly to the center"},
    {PromptCode::SitUpright, "SIT_UPRIGHT", "Please stay seated in your chair"},
    {PromptCode::AlignShoulders, "ALIGN_SHOULDERS", "Keep your shoulders level over your hips"},
    {PromptCode::SwitchToRight, "SWITCH_TO_RIGHT", "This one goes to the right →"},
    {PromptCode::SwitchToLeft, "SWITCH_TO_LEFT", "← This one goes to the left"},
    {PromptCode::TrackingLost, "TRACKING_LOST", "We lost sight of you. Move back into view"},
    {PromptCode::RepComplete, "REP_COMPLETE", "Great rep! +10"},
    {PromptCode::ExcellentForm, "EXCELLENT_FORM", "Excellent form! +5 bonus"},
    {PromptCode::PerfectStreak, "PERFECT_STREAK", "Perfect Streak!"},
    {PromptCode::AchievementUnlocked, "ACHIEVEMENT_UNLOCKED", "Achievement unlocked"},
    {PromptCode::RepNotCounted, "REP_NOT_COUNTED", "Rep not counted: stay seated and within the safe range"},
};

inline std::optional<PromptCode> prompt_code_from_key(std::string_view key) {
  for (const auto& p : kPromptTable) {
    if (p.key == key) return p.code;
  }
  return std::nullopt;
}

inline std::string_view prompt_key(PromptCode code) {
  for (const auto& p : kPromptTable) {
    if (p.code == code) return p.key;
  }
  return "UNKNOWN";
}

/// Display strings per prompt code. Starts from the built-in English table;
/// a UTF-8 `KEY=text` file may override entries.
class PromptTexts {
 public:
  PromptTexts() {
    for (const auto& p : kPromptTable) texts_[p.code] = std::string(p.default_text);
  }

  static PromptTexts load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open prompt table: " + path);
    PromptTexts t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": expected KEY=text");
      }
      auto code = prompt_code_from_key(line.substr(0, eq));
      if (!code) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": unknown prompt key '" + line.substr(0, eq) + "'");
      }
      t.texts_[*code] = line.substr(eq + 1);
    }
    return t;
  }

  const std::string& text(PromptCode code) const { return texts_.at(code); }

 private:
  std::map<PromptCode, std::string> texts_;
};

inline const PromptTexts& default_prompt_texts() {
  static const PromptTexts texts;
  return texts;
}

struct Prompt {
  PromptCode code = PromptCode::None;
  std::string text;
  AudioCue cue = AudioCue::None;

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

inline Prompt make_prompt(PromptCode code, AudioCue cue,
                          const PromptTexts& texts = default_prompt_texts()) {
  return {code, texts.text(code), cue};
}

/// Continuous guidance for the current state. Pure.
inline Prompt prompt_for(const ExerciseState& st, const ExerciseConfig& cfg,
                         const PromptTexts& texts = default_prompt_texts()) {
  Side side = st.excursion.side;
  if (st.phase == ExercisePhase::HoldingRight || st.phase == ExercisePhase::RotatingRight) {
    side = Side::Right;
  } else if (st.phase == ExercisePhase::HoldingLeft ||
             st.phase == ExercisePhase::RotatingLeft) {
    side = Side::Left;
  }
  const double a = st.current_angle_deg * side_sign(side);
  const auto perfect = side == Side::Right ? PromptCode::PerfectRight
                                           : PromptCode::PerfectLeft;
  const auto more = [](Side s) {
    return s == Side::Right ? PromptCode::RotateMoreRight : PromptCode::RotateMoreLeft;
  };

  if (st.phase == ExercisePhase::Paused) {
    return make_prompt(PromptCode::TrackingLost, AudioCue::GuidingTone, texts);
  }
  if (st.phase == ExercisePhase::OverRotated) {
    return make_prompt(PromptCode::EaseBack, AudioCue::GuidingTone, texts);
  }
  if (st.posture.fault_reason) {
    return make_prompt(*st.posture.fault_reason == PostureFault::NotSeated
                           ? PromptCode::SitUpright
                           : PromptCode::AlignShoulders,
                       AudioCue::GuidingTone, texts);
  }
  switch (st.phase) {
    case ExercisePhase::HoldingRight:
    case ExercisePhase::HoldingLeft:
      if (st.hold_progress >= 1.0) {
        return make_prompt(perfect, AudioCue::PositiveChime, texts);
      }
      if (a < cfg.excel_min_deg) {
        return make_prompt(more(side), AudioCue::GuidingTone, texts);
      }
      if (a <= cfg.excel_max_deg) {
        return make_prompt(PromptCode::GoodPosition, AudioCue::None, texts);
      }
      return make_prompt(PromptCode::HoldSteady, AudioCue::None, texts);
    case ExercisePhase::ReturningToNeutral:
      if (st.hold_progress >= 1.0) {
        return make_prompt(perfect, AudioCue::PositiveChime, texts);
      }
      return make_prompt(PromptCode::ReturnToCenter, AudioCue::None, texts);
    case ExercisePhase::RotatingRight:
    case ExercisePhase::RotatingLeft:
      return make_prompt(more(side), AudioCue::GuidingTone, texts);
    default:
      break;
  }
  // Neutral
  if (st.wrong_side_active) {
    return make_prompt(st.current_side == Side::Right ? PromptCode::SwitchToRight
                                                      : PromptCode::SwitchToLeft,
                       AudioCue::GuidingTone, texts);
  }
  return make_prompt(more(st.current_side), AudioCue::GuidingTone, texts);
}

inline constexpr int kPointsCorrectRep = 10;
inline constexpr int kPointsExcellence = 5;
inline constexpr int kPointsPostureFault = -5;
inline constexpr int kPerfectStreakLength = 5;
inline constexpr double kFiveMinuteWarriorSeconds = 300.0;

struct AchievementDef {
  std::string code;
  std::string title;
};

inline const std::vector<AchievementDef>& achievement_registry() {
  static const std::vector<AchievementDef> registry = {
      {"FIVE_MINUTE_WARRIOR", "5-Minute Warrior"},
      {"PERFECT_STREAK_5", "Perfect Streak"},
  };
  return registry;
}

inline std::string achievement_title(std::string_view code) {
  for (const auto& a : achievement_registry()) {
    if (a.code == code) return a.title;
  }
  return std::string(code);
}

struct ScoreState {
  int total_score = 0;
  int current_streak = 0;
  int best_streak = 0;
  std::set<std::string> achievements;
  double session_elapsed_s = 0.0;

  friend bool operator==(const ScoreState&, const ScoreState&) = default;
};

enum class FeedbackKind : std::uint8_t {
  RepScored,
  ExcellenceBonus,
  PostureFaultPenalty,
  PerfectStreak,
  Achievement,
  Prompt,
  OverRotationWarning,
};

inline std::string_view to_string(FeedbackKind k) {
  switch (k) {
    case FeedbackKind::RepScored: return "rep_scored";
    case FeedbackKind::ExcellenceBonus: return "excellence_bonus";
    case FeedbackKind::PostureFaultPenalty: return "posture_fault";
    case FeedbackKind::PerfectStreak: return "perfect_streak";
    case FeedbackKind::Achievement: return "achievement";
    case FeedbackKind::Prompt: return "prompt";
    case FeedbackKind::OverRotationWarning: return "over_rotation";
  }
  return "?";
}

struct FeedbackEvent {
  FeedbackKind kind = FeedbackKind::Prompt;
  int delta = 0;
  PromptCode prompt_code = PromptCode::None;
  std::string prompt_text;
  AudioCue audio_cue = AudioCue::None;
  std::string detail;

  friend bool operator==(const FeedbackEvent&, const FeedbackEvent&) = default;
};

struct ScoreStep {
  ScoreState state;
  std::vector<FeedbackEvent> events;
};

namespace detail {

inline FeedbackEvent feedback(FeedbackKind kind, int delta, PromptCode code,
                              AudioCue cue, std::string detail = {}) {
  return {kind, delta, code, default_prompt_texts().text(code), cue,
          std::move(detail)};
}

inline void unlock(ScoreState& st, std::vector<FeedbackEvent>& out,
                   const std::string& code) {
  if (!st.achievements.insert(code).second) return;
  auto ev = feedback(FeedbackKind::Achievement, 0, PromptCode::AchievementUnlocked,
                     AudioCue::PositiveChime, code);
  ev.prompt_text += ": " + achievement_title(code);
  out.push_back(std::move(ev));
}

}  // namespace detail

/// Applies one FSM event to the score. Events must arrive in emission order.
inline ScoreStep score_event(ScoreState st, const FsmEvent& event) {
  using detail::feedback;
  std::vector<FeedbackEvent> out;

  if (const auto* rc = std::get_if<RepComplete>(&event)) {
    const auto& rep = rc->rep;
    if (!rep.correct) {
      st.current_streak = 0;
      out.push_back(feedback(FeedbackKind::Prompt, 0, PromptCode::RepNotCounted,
                             AudioCue::CompletionBeep, std::to_string(rep.rep_id)));
      return {std::move(st), std::move(out)};
    }
    st.total_score += kPointsCorrectRep;
    out.push_back(feedback(FeedbackKind::RepScored, kPointsCorrectRep,
                           PromptCode::RepComplete, AudioCue::RewardCoin,
                           std::to_string(rep.rep_id)));
    if (rep.excellent) {
      st.total_score += kPointsExcellence;
      out.push_back(feedback(FeedbackKind::ExcellenceBonus, kPointsExcellence,
                             PromptCode::ExcellentForm, AudioCue::RewardCoin,
                             std::to_string(rep.rep_id)));
    }
    ++st.current_streak;
    st.best_streak = std::max(st.best_streak, st.current_streak);
    if (st.current_streak % kPerfectStreakLength == 0) {
      out.push_back(feedback(FeedbackKind::PerfectStreak, 0, PromptCode::PerfectStreak,
                             AudioCue::Fanfare, std::to_string(st.current_streak)));
      detail::unlock(st, out, "PERFECT_STREAK_5");
    }
  } else if (const auto* pf = std::get_if<PostureFaultEvent>(&event)) {
    st.total_score += kPointsPostureFault;
    st.current_streak = 0;
    out.push_back(feedback(FeedbackKind::PostureFaultPenalty, kPointsPostureFault,
                           pf->reason == PostureFault::NotSeated
                               ? PromptCode::SitUpright
                               : PromptCode::AlignShoulders,
                           AudioCue::GuidingTone, std::string(to_string(pf->reason))));
  } else if (const auto* orf = std::get_if<OverRotationFlag>(&event)) {
    out.push_back(feedback(FeedbackKind::OverRotationWarning, 0, PromptCode::EaseBack,
                           AudioCue::GuidingTone, std::string(to_string(orf->side))));
  } else if (const auto* hc = std::get_if<HoldComplete>(&event)) {
    out.push_back(feedback(FeedbackKind::Prompt, 0,
                           hc->side == Side::Right ? PromptCode::PerfectRight
                                                   : PromptCode::PerfectLeft,
                           AudioCue::PositiveChime, std::string(to_string(hc->side))));
  } else if (const auto* ws = std::get_if<WrongSidePrompt>(&event)) {
    out.push_back(feedback(FeedbackKind::Prompt, 0,
                           ws->expected == Side::Right ? PromptCode::SwitchToRight
                                                       : PromptCode::SwitchToLeft,
                           AudioCue::GuidingTone, std::string(to_string(ws->expected))));
  } else if (std::holds_alternative<TrackingPaused>(event)) {
    out.push_back(feedback(FeedbackKind::Prompt, 0, PromptCode::TrackingLost,
                           AudioCue::GuidingTone, "paused"));
  }
  return {std::move(st), std::move(out)};
}

/// Advances session time; unlocks time-based achievements.
inline ScoreStep advance_clock(ScoreState st, double dt) {
  std::vector<FeedbackEvent> out;
  const double before = st.session_elapsed_s;
  st.session_elapsed_s += dt;
  if (before < kFiveMinuteWarriorSeconds &&
      st.session_elapsed_s >= kFiveMinuteWarriorSeconds) {
    detail::unlock(st, out, "FIVE_MINUTE_WARRIOR");
  }
  return {std::move(st), std::move(out)};
}

}  // namespace seatrot
