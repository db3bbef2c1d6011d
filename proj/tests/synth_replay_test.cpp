#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <set>

#include "seatrot/kinematics.hpp"
#include "seatrot/synth_replay.hpp"

using namespace seatrot;

namespace {

const std::filesystem::path kFixtures = SEATROT_FIXTURES_DIR;

TrajectorySpec short_spec() {
  TrajectorySpec s;
  s.reps = 2;
  s.lead_in_s = 0.5;
  return s;
}

}  // namespace

TEST(Trajectory, TruthFollowsTheExcursionShape) {
  TrajectorySpec s;  // 4 s excursions: 0.5 s ramp, 2.5 s hold, 0.5 s ramp, 0.5 s rest
  EXPECT_EQ(trajectory_truth_deg(s, 0.5), 0.0);
  EXPECT_NEAR(trajectory_truth_deg(s, 1.25), 22.5, 1e-9);
  EXPECT_EQ(trajectory_truth_deg(s, 1.5), 45.0);
  EXPECT_EQ(trajectory_truth_deg(s, 3.99), 45.0);
  EXPECT_NEAR(trajectory_truth_deg(s, 4.25), 22.5, 1e-9);
  EXPECT_EQ(trajectory_truth_deg(s, 4.75), 0.0);
  EXPECT_NEAR(trajectory_truth_deg(s, 5.25), -22.5, 1e-9);
  EXPECT_EQ(trajectory_truth_deg(s, 6.0), -45.0);
  EXPECT_EQ(trajectory_truth_deg(s, s.duration_s() + 1.0), 0.0);
  s.first_side = Side::Left;
  EXPECT_EQ(trajectory_truth_deg(s, 2.0), -45.0);
}

TEST(Trajectory, FrameCountAndTimestamps) {
  const auto s = short_spec();
  const auto frames = generate_trajectory(s);
  // 0.5 s + 2 * 4 s at 30 FPS, both ends included.
  ASSERT_EQ(frames.size(), 256u);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    EXPECT_EQ(frames[i].frame.seq, i);
    EXPECT_EQ(frames[i].frame.timestamp_us, std::llround(i * 1e6 / 30.0));
  }
}

TEST(Trajectory, CleanPosesMeasureTheTruthExactly) {
  TrajectorySpec s;
  s.amplitude_deg = 80.0;
  s.reps = 6;
  double worst = 0.0;
  for (const auto& f : generate_trajectory(s)) {
    worst = std::max(worst, std::abs(torso_rotation_deg(f.frame) - f.truth_deg));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Trajectory, SameSeedSameFramesDifferentSeedDiffers) {
  auto s = short_spec();
  s.noise_deg = 2.0;
  const auto a = to_packets(generate_trajectory(s));
  EXPECT_EQ(a, to_packets(generate_trajectory(s)));
  s.seed = 2;
  EXPECT_NE(a, to_packets(generate_trajectory(s)));
}

TEST(Trajectory, NoiseHasTheRequestedSpread) {
  TrajectorySpec s;
  s.reps = 10;
  s.noise_deg = 1.5;
  std::vector<double> err;
  for (const auto& f : generate_trajectory(s)) {
    err.push_back(torso_rotation_deg(f.frame) - f.truth_deg);
  }
  double mean = 0.0;
  for (double e : err) mean += e;
  mean /= err.size();
  double ss = 0.0;
  for (double e : err) ss += (e - mean) * (e - mean);
  const double sd = std::sqrt(ss / (err.size() - 1));
  EXPECT_NEAR(mean, 0.0, 0.15);
  EXPECT_NEAR(sd, 1.5, 0.1);
}

TEST(Trajectory, DropoutAndFaultSegments) {
  auto s = short_spec();
  s.dropout_segments = {{2.0, 2.5}};
  s.posture_fault_segments = {{3.0, 3.5, PostureFault::NotSeated}};
  int dropped = 0;
  int faulted = 0;
  for (const auto& f : generate_trajectory(s)) {
    const double t = f.frame.timestamp_us * 1e-6;
    const bool in_drop = t >= 2.0 - 1e-9 && t < 2.5 - 1e-9;
    EXPECT_EQ(f.dropout, in_drop) << t;
    if (f.dropout) {
      ++dropped;
      for (const auto& lm : f.frame.landmarks) EXPECT_EQ(lm.visibility, 0.0);
    }
    if (f.fault) {
      ++faulted;
      EXPECT_EQ(classify_posture(f.frame, {}).fault_reason, PostureFault::NotSeated);
    }
  }
  EXPECT_EQ(dropped, 15);
  EXPECT_EQ(faulted, 15);
}

TEST(Trajectory, SpecValidationAndJson) {
  TrajectorySpec s;
  s.fps = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.hold_s = 5.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.noise_deg = 0.7;
  s.dropout_segments = {{1.0, 2.0}};
  s.posture_fault_segments = {{3.0, 4.0, PostureFault::ShoulderPelvisMisaligned}};
  s.first_side = Side::Left;
  const auto back = trajectory_spec_from_json(to_json(s));
  EXPECT_EQ(to_packets(generate_trajectory(back)), to_packets(generate_trajectory(s)));
}

TEST(Impairment, LossCountIsBinomial) {
  TrajectorySpec s;
  s.reps = 40;
  const auto clean = to_packets(generate_trajectory(s));
  ImpairmentSpec imp;
  imp.loss_rate = 0.1;
  imp.seed = 11;
  const auto out = impair(clean, imp);
  const double n = static_cast<double>(clean.size());
  const double lost = n - static_cast<double>(out.size());
  const double sigma = std::sqrt(n * 0.1 * 0.9);
  EXPECT_LE(std::abs(lost - 0.1 * n), 4.0 * sigma) << lost << " of " << n;
}

TEST(Impairment, ArrivalsSortedAndContentPreserved) {
  const auto clean = to_packets(generate_trajectory(short_spec()));
  ImpairmentSpec imp;
  imp.loss_rate = 0.1;
  imp.reorder_rate = 0.1;
  imp.duplicate_rate = 0.1;
  imp.jitter_ms = 5.0;
  imp.seed = 5;
  const auto out = impair(clean, imp);
  std::set<Bytes> originals;
  for (const auto& p : clean) originals.insert(p.bytes);
  std::uint64_t prev = 0;
  bool out_of_order = false;
  std::uint32_t last_seq = 0;
  std::set<std::uint32_t> seen;
  int dups = 0;
  for (const auto& p : out) {
    EXPECT_GE(p.at_us, prev);
    prev = p.at_us;
    EXPECT_TRUE(originals.count(p.bytes));
    const auto seq = decode_pose(p.bytes).value().seq;
    if (!seen.insert(seq).second) ++dups;
    if (seq < last_seq) out_of_order = true;
    last_seq = seq;
  }
  EXPECT_TRUE(out_of_order);
  EXPECT_GT(dups, 0);
  EXPECT_EQ(out, impair(clean, imp));
}

TEST(Impairment, ZeroRatesAreIdentity) {
  const auto clean = to_packets(generate_trajectory(short_spec()));
  EXPECT_EQ(impair(clean, ImpairmentSpec{}), clean);
  ImpairmentSpec bad;
  bad.loss_rate = 1.0;
  EXPECT_THROW(impair(clean, bad), std::invalid_argument);
}

TEST(Recording, RoundTrip) {
  Recording rec;
  rec.packets = to_packets(generate_trajectory(short_spec()));
  rec.header["start_time"] = "2025-01-15T11:00:00Z";
  const auto bytes = serialize_recording(rec);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "TSHFREC1");
  const auto back = parse_recording(bytes);
  EXPECT_EQ(back.packets, rec.packets);
  EXPECT_EQ(back.header["start_time"], "2025-01-15T11:00:00Z");
  EXPECT_EQ(back.header["packet_count"], rec.packets.size());
  EXPECT_EQ(serialize_recording(back), bytes);
}

TEST(Recording, CommittedFixtureParses) {
  const auto rec = read_recording(kFixtures / "perfect-5-reps.tshfrec");
  EXPECT_EQ(rec.packets.size(), 631u);
  const auto spec = trajectory_spec_from_json(rec.header.at("trajectory"));
  EXPECT_EQ(rec.packets, to_packets(generate_trajectory(spec)));
}

TEST(Recording, CorruptionIsReportedWithOffset) {
  Recording rec;
  rec.packets = to_packets(generate_trajectory(short_spec()));
  const auto good = serialize_recording(rec);

  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(parse_recording(bad), RecordingError);

  bad = good;
  bad.resize(bad.size() - 10);
  try {
    parse_recording(bad);
    FAIL();
  } catch (const RecordingError& e) {
    EXPECT_LT(e.offset(), bad.size());
  }

  // Break the magic of the third packet.
  const std::uint32_t header_len = good[8] | good[9] << 8 | good[10] << 16 | good[11] << 24;
  bad = good;
  const std::size_t third = 12 + header_len + 2 * (4 + 546) + 4;
  bad[third] ^= 0xFF;
  try {
    parse_recording(bad);
    FAIL();
  } catch (const RecordingError& e) {
    EXPECT_EQ(e.offset(), third);
  }

  EXPECT_THROW(read_recording(kFixtures / "malformed" / "truncated.tshfrec"), RecordingError);
}

TEST(Recording, RejectsNonPoseOrUnsortedPackets) {
  Recording rec;
  rec.packets = to_packets(generate_trajectory(short_spec()));
  std::swap(rec.packets[3].at_us, rec.packets[4].at_us);
  EXPECT_THROW(serialize_recording(rec), std::invalid_argument);
  rec.packets.resize(2);
  rec.packets[1].bytes.resize(41);
  rec.packets[1].at_us = rec.packets[0].at_us + 1;
  EXPECT_THROW(serialize_recording(rec), std::invalid_argument);
}

TEST(ReplayCursor, InfiniteSpeedDoesNotSleep) {
  Recording rec;
  rec.packets = to_packets(generate_trajectory(short_spec()));
  const auto t0 = std::chrono::steady_clock::now();
  ReplayCursor cur(rec, kAsFastAsPossible);
  std::size_t n = 0;
  while (cur.next()) ++n;
  EXPECT_EQ(n, rec.packets.size());
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::milliseconds(500));
}

TEST(ReplayCursor, FiniteSpeedScalesTheTimeline) {
  Recording rec;
  auto s = short_spec();
  s.reps = 0;
  s.lead_in_s = 1.0;  // 31 frames over 1 s
  rec.packets = to_packets(generate_trajectory(s));
  const auto t0 = std::chrono::steady_clock::now();
  ReplayCursor cur(rec, 4.0);
  while (cur.next()) {
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_GE(elapsed, 0.25 - 0.01);
  EXPECT_LT(elapsed, 1.0);
  EXPECT_THROW(ReplayCursor(rec, 0.0), std::invalid_argument);
}
