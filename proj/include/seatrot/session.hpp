#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "seatrot/exercise_fsm.hpp"
#include "seatrot/kinematics.hpp"
#include "seatrot/latency.hpp"
#include "seatrot/pose_pipeline.hpp"
#include "seatrot/scoring.hpp"
#include "seatrot/session_log.hpp"
#include "seatrot/wire_protocol.hpp"

namespace seatrot {

struct EngineConfig {
  std::string bind_host = "0.0.0.0";
  std::uint16_t listen_port = wire::kDefaultPosePort;
  std::string feedback_host = "127.0.0.1";
  std::uint16_t feedback_port = wire::kDefaultFeedbackPort;
  std::uint16_t ui_bridge_port = wire::kDefaultBridgePort;
  ExerciseConfig exercise;
  PostureConfig posture;
  SmootherConfig smoothing;
  std::string sessions_dir = "sessions";
  double idle_timeout_s = 30.0;
  // dt assumed for the first frame of a stream and after a pause.
  double nominal_frame_s = 1.0 / 30.0;
  std::string log_level = "info";
  // Optional KEY=text file overriding the prompt strings sent to displays.
  std::string prompts_file;

  void validate() const {
    exercise.validate();
    posture.validate();
    smoothing.validate();
    // Port 0 asks the OS for an ephemeral port and may repeat.
    if ((listen_port != 0 && listen_port == ui_bridge_port) ||
        (listen_port != 0 && listen_port == feedback_port &&
         (feedback_host == "127.0.0.1" || feedback_host == "localhost"))) {
      throw std::invalid_argument("engine ports must be distinct");
    }
    if (!(idle_timeout_s > 0.0)) throw std::invalid_argument("idle_timeout_s must be > 0");
    if (!(nominal_frame_s > 0.0 && nominal_frame_s <= kMaxStepSeconds)) {
      throw std::invalid_argument("nominal_frame_s must be in (0, 0.5]");
    }
  }
};

inline nlohmann::json to_json(const EngineConfig& c) {
  return {{"bind_host", c.bind_host},
          {"listen_port", c.listen_port},
          {"feedback_host", c.feedback_host},
          {"feedback_port", c.feedback_port},
          {"ui_bridge_port", c.ui_bridge_port},
          {"exercise", nlohmann::json::parse(to_json(c.exercise).dump())},
          {"posture", {{"seated_max", c.posture.seated_max}, {"tilt_max_deg", c.posture.tilt_max_deg}}},
          {"smoothing",
           {{"alpha", c.smoothing.alpha},
            {"tau", c.smoothing.tau},
            {"dropout_limit", c.smoothing.dropout_limit}}},
          {"sessions_dir", c.sessions_dir},
          {"idle_timeout_s", c.idle_timeout_s},
          {"nominal_frame_s", c.nominal_frame_s},
          {"log_level", c.log_level},
          {"prompts_file", c.prompts_file}};
}

/// Reads an engine config document; absent keys keep their defaults.
inline EngineConfig engine_config_from_json(const nlohmann::json& j, EngineConfig c = {}) {
  c.bind_host = j.value("bind_host", c.bind_host);
  c.listen_port = j.value("listen_port", c.listen_port);
  c.feedback_host = j.value("feedback_host", c.feedback_host);
  c.feedback_port = j.value("feedback_port", c.feedback_port);
  c.ui_bridge_port = j.value("ui_bridge_port", c.ui_bridge_port);
  if (j.contains("exercise")) c.exercise = exercise_config_from_json(j.at("exercise"));
  if (j.contains("posture")) {
    c.posture.seated_max = j["posture"].value("seated_max", c.posture.seated_max);
    c.posture.tilt_max_deg = j["posture"].value("tilt_max_deg", c.posture.tilt_max_deg);
  }
  if (j.contains("smoothing")) {
    c.smoothing.alpha = j["smoothing"].value("alpha", c.smoothing.alpha);
    c.smoothing.tau = j["smoothing"].value("tau", c.smoothing.tau);
    c.smoothing.dropout_limit = j["smoothing"].value("dropout_limit", c.smoothing.dropout_limit);
  }
  c.sessions_dir = j.value("sessions_dir", c.sessions_dir);
  c.idle_timeout_s = j.value("idle_timeout_s", c.idle_timeout_s);
  c.nominal_frame_s = j.value("nominal_frame_s", c.nominal_frame_s);
  c.log_level = j.value("log_level", c.log_level);
  c.prompts_file = j.value("prompts_file", c.prompts_file);
  c.validate();
  return c;
}

enum class FrameStatus { Processed, DroppedStale, Malformed };

struct FrameOutcome {
  FrameStatus status = FrameStatus::Processed;
  FeedbackPacket feedback;
  Bytes feedback_bytes;
  std::vector<FsmEvent> fsm_events;
  std::vector<FeedbackEvent> events;
  bool trackable = false;
};

namespace detail {

inline int cue_rank(AudioCue c) {
  switch (c) {
    case AudioCue::Fanfare: return 5;
    case AudioCue::RewardCoin: return 4;
    case AudioCue::CompletionBeep: return 3;
    case AudioCue::PositiveChime: return 2;
    case AudioCue::GuidingTone: return 1;
    case AudioCue::None: return 0;
  }
  return 0;
}

}  // namespace detail

/// One patient session: sequence gate, conditioning, kinematics, exercise
/// state machine, scoring, feedback encoding and the session log. Performs no
/// I/O; the caller supplies datagrams and the session's wall-clock start.
class SessionProcessor {
 public:
  SessionProcessor(EngineConfig cfg, UtcMillis start_time)
      : cfg_(std::move(cfg)), smoother_(cfg_.smoothing) {
    cfg_.validate();
    log_.start_time = start_time;
    log_.end_time = start_time;
    log_.config_snapshot = cfg_.exercise;
  }

  FrameOutcome on_datagram(ByteView bytes) {
    StageTimer total;
    StageTimer t;
    auto decoded = decode_pose(bytes);
    stats_.record(Stage::Decode, t.lap_us());
    if (!decoded) {
      ++stats_.frames_malformed;
      FrameOutcome out;
      out.status = FrameStatus::Malformed;
      return out;
    }
    return process(decoded.value(), total);
  }

  FrameOutcome on_frame(const PoseFrame& frame) {
    StageTimer total;
    return process(frame, total);
  }

  /// The session log as of the last processed frame.
  SessionLog snapshot() const {
    SessionLog log = log_;
    log.total_score = score_.total_score;
    log.streaks = score_.best_streak;
    return log;
  }

  std::size_t logged_reps() const { return log_.reps.size(); }
  const ExerciseState& exercise_state() const { return fsm_; }
  const ScoreState& score_state() const { return score_; }
  const LatencyStats& stats() const { return stats_; }
  const EngineConfig& config() const { return cfg_; }
  std::uint64_t frames_processed() const { return stats_.frames_processed; }

 private:
  FrameOutcome process(const PoseFrame& frame, StageTimer& total) {
    FrameOutcome out;
    if (gate_.offer(frame.seq) == SeqDecision::DropStale) {
      ++stats_.frames_dropped_stale;
      out.status = FrameStatus::DroppedStale;
      return out;
    }
    if (!frame_is_well_formed(frame)) {
      ++stats_.frames_malformed;
      out.status = FrameStatus::Malformed;
      return out;
    }

    double dt = cfg_.nominal_frame_s;
    if (last_ts_) {
      dt = frame.timestamp_us > *last_ts_
               ? static_cast<double>(frame.timestamp_us - *last_ts_) * 1e-6
               : 0.0;
    } else {
      first_ts_ = frame.timestamp_us;
    }
    if (!last_ts_ || frame.timestamp_us > *last_ts_) last_ts_ = frame.timestamp_us;
    log_.end_time = wall_time(*last_ts_);

    StageTimer t;
    const auto conditioned = smoother_.condition(frame);
    stats_.record(Stage::Condition, t.lap_us());

    bool dropout = false;
    bool pause = false;
    std::optional<PoseFrame> measured;
    if (const auto* c = std::get_if<ConditionedFrame>(&conditioned)) {
      measured = c->pose;
      out.trackable = true;
    } else {
      const auto& d = std::get<Dropout>(conditioned);
      dropout = true;
      pause = d.exhausted;
    }
    if (measured) {
      try {
        held_ = Measurement{torso_rotation_deg(*measured), classify_posture(*measured, cfg_.posture)};
      } catch (const DegenerateVector&) {
        dropout = true;
        out.trackable = false;
      }
    }
    stats_.record(Stage::Kinematics, t.lap_us());

    std::vector<FsmEvent> fsm_events;
    auto run = [&](FsmStep step) {
      fsm_ = std::move(step.state);
      for (auto& e : step.events) fsm_events.push_back(std::move(e));
    };
    if (pause) {
      run(fsm_pause(fsm_));
    } else if (held_ && dt > 0.0) {
      if (dt > kMaxStepSeconds) {
        run(fsm_pause(fsm_));
        dt = cfg_.nominal_frame_s;
      }
      run(fsm_step(fsm_, held_->angle, held_->posture, dt, cfg_.exercise));
    }

    std::vector<FeedbackEvent> feedback_events;
    for (const auto& e : fsm_events) {
      record_fsm_event(e);
      auto step = score_event(std::move(score_), e);
      score_ = std::move(step.state);
      for (auto& fe : step.events) feedback_events.push_back(std::move(fe));
    }
    if (dt > 0.0) {
      auto step = advance_clock(std::move(score_), dt);
      score_ = std::move(step.state);
      for (auto& fe : step.events) feedback_events.push_back(std::move(fe));
    }
    for (const auto& fe : feedback_events) record_feedback_event(fe);
    stats_.record(Stage::FsmScore, t.lap_us());

    out.feedback = make_feedback(frame, dropout, feedback_events);
    out.feedback_bytes = encode_feedback(out.feedback);
    stats_.record(Stage::Encode, t.lap_us());

    out.fsm_events = std::move(fsm_events);
    out.events = std::move(feedback_events);
    ++stats_.frames_processed;
    stats_.record(Stage::EndToEnd, total.lap_us());
    return out;
  }

  FeedbackPacket make_feedback(const PoseFrame& frame, bool dropout,
                               const std::vector<FeedbackEvent>& events) {
    FeedbackPacket p;
    p.seq = frame.seq;
    p.timestamp_us = frame.timestamp_us;
    p.phase = fsm_.phase;
    p.angle_deg = static_cast<float>(fsm_.current_angle_deg);
    p.hold_progress = static_cast<float>(fsm_.hold_progress);
    p.total_score = score_.total_score;
    p.current_streak = static_cast<std::uint16_t>(std::clamp(score_.current_streak, 0, 0xFFFF));
    p.rep_count = static_cast<std::uint16_t>(std::clamp(fsm_.rep_count, 0, 0xFFFF));
    if (fsm_.posture.fault_reason == PostureFault::NotSeated) p.posture_flags |= wire::kFlagNotSeated;
    if (fsm_.posture.fault_reason == PostureFault::ShoulderPelvisMisaligned) {
      p.posture_flags |= wire::kFlagMisaligned;
    }
    if (fsm_.phase == ExercisePhase::OverRotated) p.posture_flags |= wire::kFlagOverRotated;
    if (dropout) p.posture_flags |= wire::kFlagDropout;

    // Discrete events take the prompt slot for the frame they happen on; the
    // loudest cue wins. Otherwise the continuous prompt is shown and its cue
    // sounds only when the prompt changes.
    const FeedbackEvent* top = nullptr;
    for (const auto& e : events) {
      if (!top || detail::cue_rank(e.audio_cue) > detail::cue_rank(top->audio_cue)) top = &e;
    }
    const auto prompt = prompt_for(fsm_, cfg_.exercise);
    if (top) {
      p.prompt_code = static_cast<std::uint16_t>(top->prompt_code);
      p.audio_cue = static_cast<std::uint8_t>(top->audio_cue);
    } else {
      p.prompt_code = static_cast<std::uint16_t>(prompt.code);
      p.audio_cue = prompt.code != last_prompt_ ? static_cast<std::uint8_t>(prompt.cue) : 0;
    }
    last_prompt_ = prompt.code;
    return p;
  }

  void record_fsm_event(const FsmEvent& e) {
    const auto now = log_.end_time;
    if (const auto* rc = std::get_if<RepComplete>(&e)) {
      // Stored at log precision so a snapshot survives a JSON round trip.
      auto rep = rc->rep;
      rep.angle = round_to(rep.angle, 10.0);
      rep.hold_duration = round_to(rep.hold_duration, 1000.0);
      log_.reps.push_back(rep);
    } else if (const auto* pf = std::get_if<PostureFaultEvent>(&e)) {
      log_.events.push_back({now, std::string(event_kind::kPostureFault),
                             std::string(to_string(pf->reason))});
    } else if (const auto* orf = std::get_if<OverRotationFlag>(&e)) {
      log_.events.push_back({now, std::string(event_kind::kOverRotation),
                             std::string(to_string(orf->side))});
    } else if (const auto* ws = std::get_if<WrongSidePrompt>(&e)) {
      log_.events.push_back({now, std::string(event_kind::kWrongSide),
                             "expected " + std::string(to_string(ws->expected))});
    } else if (std::holds_alternative<TrackingPaused>(e)) {
      log_.events.push_back({now, std::string(event_kind::kPaused), "tracking lost"});
    }
  }

  void record_feedback_event(const FeedbackEvent& fe) {
    if (fe.kind == FeedbackKind::PerfectStreak) {
      log_.events.push_back({log_.end_time, std::string(event_kind::kPerfectStreak), fe.detail});
    } else if (fe.kind == FeedbackKind::Achievement) {
      log_.events.push_back({log_.end_time, std::string(event_kind::kAchievement), fe.detail});
    }
  }

  UtcMillis wall_time(std::uint64_t ts_us) const {
    return log_.start_time + static_cast<UtcMillis>((ts_us - *first_ts_) / 1000);
  }

  struct Measurement {
    double angle;
    PostureStatus posture;
  };

  EngineConfig cfg_;
  Smoother smoother_;
  SequenceGate gate_;
  ExerciseState fsm_;
  ScoreState score_;
  SessionLog log_;
  LatencyStats stats_;
  std::optional<Measurement> held_;
  std::optional<std::uint64_t> first_ts_;
  std::optional<std::uint64_t> last_ts_;
  PromptCode last_prompt_ = PromptCode::None;
};

/// Runs a packet stream through a fresh session and returns the final log.
inline SessionLog process_packets(const std::vector<TimedPacket>& packets,
                                  const EngineConfig& cfg, UtcMillis start_time,
                                  LatencyStats* stats = nullptr) {
  SessionProcessor proc(cfg, start_time);
  for (const auto& p : packets) proc.on_datagram(p.bytes);
  if (stats) *stats = proc.stats();
  return proc.snapshot();
}

inline UtcMillis recording_start_time(const Recording& rec) {
  if (rec.header.contains("start_time")) {
    return parse_utc(rec.header.at("start_time").get<std::string>());
  }
  return 0;
}

}  // namespace seatrot
