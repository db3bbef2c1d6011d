#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "seatrot/exercise_fsm.hpp"

using namespace seatrot;

namespace {

constexpr double kDt = 1.0 / 30.0;

struct Run {
  ExerciseState state;
  std::vector<FsmEvent> events;
  std::vector<ExerciseState> trace;

  template <typename E>
  std::vector<E> all() const {
    std::vector<E> out;
    for (const auto& e : events) {
      if (const auto* p = std::get_if<E>(&e)) out.push_back(*p);
    }
    return out;
  }
};

Run run(const std::vector<double>& angles, const ExerciseConfig& cfg = {},
        ExerciseState start = {}, std::vector<PostureStatus> posture = {}) {
  Run r{std::move(start), {}, {}};
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const PostureStatus p = i < posture.size() ? posture[i] : PostureStatus{};
    auto step = fsm_step(r.state, angles[i], p, kDt, cfg);
    r.state = step.state;
    for (auto& e : step.events) r.events.push_back(e);
    r.trace.push_back(r.state);
  }
  return r;
}

// One excursion: rest, linear ramp to `peak` over `ramp_s`, hold, ramp back, rest.
std::vector<double> excursion(double peak, double hold_s, double ramp_s = 0.5,
                              double rest_s = 0.5) {
  std::vector<double> a;
  auto add = [&](double seconds, auto fn) {
    const int n = static_cast<int>(std::lround(seconds / kDt));
    for (int i = 0; i < n; ++i) a.push_back(fn(static_cast<double>(i) / n));
  };
  add(rest_s, [](double) { return 0.0; });
  add(ramp_s, [&](double u) { return peak * u; });
  add(hold_s, [&](double) { return peak; });
  add(ramp_s, [&](double u) { return peak * (1.0 - u); });
  add(rest_s, [](double) { return 0.0; });
  return a;
}

// Oracle for the in-range time the state machine should credit: samples with
// safe_min <= projected angle <= safe_max, each worth one frame period.
double oracle_hold_s(const std::vector<double>& angles, double sign, const ExerciseConfig& cfg) {
  int n = 0;
  for (double a : angles) {
    const double p = a * sign;
    if (p >= cfg.safe_min_deg && p <= cfg.safe_max_deg) ++n;
  }
  return n * kDt;
}

PostureStatus faulted(PostureFault f) {
  PostureStatus p;
  p.fault_reason = f;
  p.is_seated = f != PostureFault::NotSeated;
  p.is_aligned = f != PostureFault::ShoulderPelvisMisaligned;
  return p;
}

}  // namespace

TEST(ExerciseFsm, PerfectRightRepIsCorrectAndExcellent) {
  const ExerciseConfig cfg;
  const auto angles = excursion(45.0, 2.5);
  const auto r = run(angles, cfg);
  const auto reps = r.all<RepComplete>();
  ASSERT_EQ(reps.size(), 1u);
  const auto& rep = reps[0].rep;
  EXPECT_EQ(rep.rep_id, 1);
  EXPECT_EQ(rep.side, Side::Right);
  EXPECT_TRUE(rep.correct);
  EXPECT_TRUE(rep.excellent);
  EXPECT_DOUBLE_EQ(rep.angle, 45.0);
  EXPECT_NEAR(rep.hold_duration, oracle_hold_s(angles, 1.0, cfg), 1e-9);
  EXPECT_EQ(r.all<HoldComplete>().size(), 1u);
  EXPECT_EQ(r.state.phase, ExercisePhase::Neutral);
  EXPECT_EQ(r.state.rep_count, 1);
  EXPECT_EQ(r.state.current_side, Side::Left);
}

TEST(ExerciseFsm, PhaseSequenceForOneRep) {
  const auto r = run(excursion(45.0, 2.5));
  std::vector<ExercisePhase> seen;
  for (const auto& s : r.trace) {
    if (seen.empty() || seen.back() != s.phase) seen.push_back(s.phase);
  }
  const std::vector<ExercisePhase> expected = {
      ExercisePhase::Neutral, ExercisePhase::RotatingRight, ExercisePhase::HoldingRight,
      ExercisePhase::ReturningToNeutral, ExercisePhase::Neutral};
  EXPECT_EQ(seen, expected);
}

TEST(ExerciseFsm, ShortHoldCountsNothing) {
  const auto r = run(excursion(45.0, 1.0));
  EXPECT_TRUE(r.all<RepComplete>().empty());
  EXPECT_TRUE(r.all<HoldComplete>().empty());
  EXPECT_EQ(r.state.rep_count, 0);
  EXPECT_EQ(r.state.current_side, Side::Right);
}

TEST(ExerciseFsm, HoldOutsideExcellenceBandIsCorrectOnly) {
  const auto r = run(excursion(30.0, 2.5));
  const auto reps = r.all<RepComplete>();
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_TRUE(reps[0].rep.correct);
  EXPECT_FALSE(reps[0].rep.excellent);
}

TEST(ExerciseFsm, ExcellenceNeedsAContiguousRunInBand) {
  // Peak is in band but the band run is broken halfway through the hold.
  std::vector<double> a(15, 0.0);
  for (int i = 0; i < 15; ++i) a.push_back(45.0 * i / 15);
  for (int i = 0; i < 40; ++i) a.push_back(45.0);
  for (int i = 0; i < 10; ++i) a.push_back(35.0);
  for (int i = 0; i < 40; ++i) a.push_back(45.0);
  for (int i = 0; i < 15; ++i) a.push_back(45.0 * (1.0 - static_cast<double>(i) / 15));
  a.resize(a.size() + 15, 0.0);
  const auto reps = run(a).all<RepComplete>();
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_TRUE(reps[0].rep.correct);
  EXPECT_FALSE(reps[0].rep.excellent);
}

TEST(ExerciseFsm, HoldProgressIsMonotoneWhileHoldingAndClamped) {
  const auto r = run(excursion(45.0, 2.5));
  double last = 0.0;
  for (const auto& s : r.trace) {
    EXPECT_GE(s.hold_progress, 0.0);
    EXPECT_LE(s.hold_progress, 1.0);
    if (is_holding(s.phase)) {
      EXPECT_GE(s.hold_progress, last);
      last = s.hold_progress;
    }
    if (s.phase == ExercisePhase::Neutral) {
      EXPECT_EQ(s.hold_progress, 0.0);
    }
  }
  EXPECT_EQ(last, 1.0);
}

TEST(ExerciseFsm, OverRotationFlagsAndNeverCountsARep) {
  const auto r = run(excursion(70.0, 2.5));
  EXPECT_EQ(r.all<OverRotationFlag>().size(), 1u);
  EXPECT_TRUE(r.all<RepComplete>().empty());
  bool saw_over = false;
  double frozen = -1.0;
  for (const auto& s : r.trace) {
    if (s.phase == ExercisePhase::OverRotated) {
      if (frozen < 0) frozen = s.hold_elapsed_s;
      EXPECT_EQ(s.hold_elapsed_s, frozen);
      saw_over = true;
    }
  }
  EXPECT_TRUE(saw_over);
}

TEST(ExerciseFsm, OverRotationAfterCompletedHoldRecordsAnIncorrectRep) {
  auto a = excursion(45.0, 2.5);
  // Spike past the safe maximum in the middle of the hold.
  const auto mid = a.size() / 2;
  a[mid] = 65.0;
  const auto r = run(a);
  const auto reps = r.all<RepComplete>();
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_FALSE(reps[0].rep.correct);
  EXPECT_FALSE(reps[0].rep.excellent);
  EXPECT_EQ(r.all<OverRotationFlag>().size(), 1u);
}

TEST(ExerciseFsm, WrongSidePromptsOnceAndDoesNotCount) {
  auto a = excursion(-45.0, 2.5);
  const auto r = run(a);
  const auto prompts = r.all<WrongSidePrompt>();
  ASSERT_EQ(prompts.size(), 1u);
  EXPECT_EQ(prompts[0].expected, Side::Right);
  EXPECT_TRUE(r.all<RepComplete>().empty());
}

TEST(ExerciseFsm, AlternatesSides) {
  auto a = excursion(45.0, 2.5);
  const auto left = excursion(-45.0, 2.5);
  a.insert(a.end(), left.begin(), left.end());
  const auto right = excursion(45.0, 2.5);
  a.insert(a.end(), right.begin(), right.end());
  const auto reps = run(a).all<RepComplete>();
  ASSERT_EQ(reps.size(), 3u);
  EXPECT_EQ(reps[0].rep.side, Side::Right);
  EXPECT_EQ(reps[1].rep.side, Side::Left);
  EXPECT_EQ(reps[2].rep.side, Side::Right);
  EXPECT_EQ(reps[2].rep.rep_id, 3);
}

TEST(ExerciseFsm, FreeSideChoiceWhenAlternationIsOff) {
  ExerciseConfig cfg;
  cfg.alternate_sides = false;
  auto a = excursion(-45.0, 2.5);
  const auto again = excursion(-45.0, 2.5);
  a.insert(a.end(), again.begin(), again.end());
  const auto r = run(a, cfg);
  EXPECT_EQ(r.all<RepComplete>().size(), 2u);
  EXPECT_TRUE(r.all<WrongSidePrompt>().empty());
}

TEST(ExerciseFsm, PostureFaultDuringHoldFreezesHoldAndSpoilsRep) {
  const auto a = excursion(45.0, 3.0);
  std::vector<PostureStatus> posture(a.size());
  // Fault for 0.5 s in the middle of the hold.
  const std::size_t from = 15 + 15 + 30;
  for (std::size_t i = from; i < from + 15; ++i) posture[i] = faulted(PostureFault::NotSeated);
  const auto r = run(a, {}, {}, posture);
  const auto faults = r.all<PostureFaultEvent>();
  ASSERT_EQ(faults.size(), 1u);
  EXPECT_EQ(faults[0].reason, PostureFault::NotSeated);
  const auto reps = r.all<RepComplete>();
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_FALSE(reps[0].rep.correct);
  EXPECT_NEAR(reps[0].rep.hold_duration, oracle_hold_s(a, 1.0, {}) - 15 * kDt, 1e-9);
}

TEST(ExerciseFsm, FaultEpisodeNeedsQuietTimeBeforeReemitting) {
  const auto a = excursion(45.0, 3.0);
  std::vector<PostureStatus> posture(a.size());
  const std::size_t from = 35;
  // Two faults 0.5 s apart share an episode; a third after a 1.2 s gap is new.
  posture[from] = faulted(PostureFault::ShoulderPelvisMisaligned);
  posture[from + 15] = faulted(PostureFault::ShoulderPelvisMisaligned);
  posture[from + 15 + 36] = faulted(PostureFault::NotSeated);
  const auto faults = run(a, {}, {}, posture).all<PostureFaultEvent>();
  ASSERT_EQ(faults.size(), 2u);
  EXPECT_EQ(faults[1].reason, PostureFault::NotSeated);
}

TEST(ExerciseFsm, PostureFaultsInNeutralAreIgnored) {
  std::vector<double> a(60, 0.0);
  std::vector<PostureStatus> posture(a.size(), faulted(PostureFault::NotSeated));
  const auto r = run(a, {}, {}, posture);
  EXPECT_TRUE(r.events.empty());
}

TEST(ExerciseFsm, PauseAbandonsExcursionAndIsIdempotent) {
  auto a = excursion(45.0, 2.5);
  a.resize(40);  // stop mid-hold
  auto r = run(a);
  ASSERT_TRUE(is_holding(r.state.phase));
  auto p = fsm_pause(r.state);
  EXPECT_EQ(p.state.phase, ExercisePhase::Paused);
  ASSERT_EQ(p.events.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<TrackingPaused>(p.events[0]));
  EXPECT_EQ(p.state.hold_progress, 0.0);
  const auto again = fsm_pause(p.state);
  EXPECT_TRUE(again.events.empty());
  EXPECT_EQ(again.state, p.state);
  const auto resumed = fsm_step(p.state, 0.0, {}, kDt, {});
  EXPECT_EQ(resumed.state.phase, ExercisePhase::Neutral);
  EXPECT_EQ(resumed.state.rep_count, r.state.rep_count);
}

TEST(ExerciseFsm, RejectsBadTimeSteps) {
  EXPECT_THROW(fsm_step({}, 0.0, {}, 0.0, {}), std::invalid_argument);
  EXPECT_THROW(fsm_step({}, 0.0, {}, -0.1, {}), std::invalid_argument);
  EXPECT_THROW(fsm_step({}, 0.0, {}, 0.51, {}), std::invalid_argument);
  EXPECT_NO_THROW(fsm_step({}, 0.0, {}, 0.5, {}));
}

TEST(ExerciseFsm, ConfigValidation) {
  ExerciseConfig c;
  EXPECT_NO_THROW(c.validate());
  c.hold_required_s = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.excel_max_deg = 65.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ExerciseFsm, RandomTracesKeepInvariants) {
  std::mt19937 gen(99);
  std::normal_distribution<double> step(0.0, 4.0);
  std::bernoulli_distribution fault(0.02);
  for (int trial = 0; trial < 50; ++trial) {
    ExerciseState s;
    double angle = 0.0;
    int last_rep_id = 0;
    for (int i = 0; i < 3000; ++i) {
      angle = std::clamp(angle + step(gen), -80.0, 80.0);
      PostureStatus p = fault(gen) ? faulted(PostureFault::NotSeated) : PostureStatus{};
      auto st = fsm_step(s, angle, p, kDt, {});
      ASSERT_GE(st.state.hold_progress, 0.0);
      ASSERT_LE(st.state.hold_progress, 1.0);
      ASSERT_GE(st.state.rep_count, s.rep_count);
      for (const auto& e : st.events) {
        if (const auto* rc = std::get_if<RepComplete>(&e)) {
          ASSERT_EQ(rc->rep.rep_id, last_rep_id + 1);
          last_rep_id = rc->rep.rep_id;
          if (rc->rep.excellent) {
            ASSERT_TRUE(rc->rep.correct);
          }
          if (rc->rep.correct) {
            ASSERT_GE(rc->rep.hold_duration, 2.0 - 1e-9);
          }
          ASSERT_LE(rc->rep.angle, 60.0);
        }
      }
      s = st.state;
    }
  }
}
