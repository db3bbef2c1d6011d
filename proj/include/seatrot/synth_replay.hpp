#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "seatrot/kinematics.hpp"
#include "seatrot/pose_model.hpp"
#include "seatrot/session_log.hpp"
#include "seatrot/wire_protocol.hpp"

namespace seatrot {

/// Seeded generator shared by the trajectory synthesizer and the impairment
/// model. Uniforms take the top 53 bits of mt19937_64; normals use the
/// Box-Muller transform, so sequences do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/u53/box-muller";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal(double mean = 0.0, double sd = 1.0) {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return mean + sd * z;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    return mean + sd * r * std::cos(th);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

// ---------------------------------------------------------------------------
// Synthetic trajectories

struct TimeSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  bool contains(double t) const { return t >= start_s && t < end_s; }
};

struct FaultSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  PostureFault kind = PostureFault::NotSeated;
};

struct TrajectorySpec {
  double amplitude_deg = 45.0;
  double period_s = 8.0;  // one right excursion plus one left excursion
  double hold_s = 2.5;
  int reps = 5;           // number of excursions, alternating sides
  double fps = 30.0;
  double noise_deg = 0.0;
  std::vector<TimeSegment> dropout_segments;
  std::vector<FaultSegment> posture_fault_segments;
  std::uint64_t seed = 1;
  double lead_in_s = 1.0;
  Side first_side = Side::Right;
  std::uint32_t first_seq = 0;

  void validate() const {
    if (!(fps >= 1.0 && fps <= 120.0)) throw std::invalid_argument("fps must be in [1, 120]");
    if (!(amplitude_deg >= 0.0 && amplitude_deg <= 90.0)) {
      throw std::invalid_argument("amplitude_deg must be in [0, 90]");
    }
    if (reps < 0) throw std::invalid_argument("reps must be >= 0");
    if (!(hold_s >= 0.0 && period_s > 0.0 && hold_s < period_s / 2.0)) {
      throw std::invalid_argument("hold_s must be shorter than half the period");
    }
    if (!(noise_deg >= 0.0) || !(lead_in_s >= 0.0)) {
      throw std::invalid_argument("noise_deg and lead_in_s must be >= 0");
    }
  }

  // Each excursion: ramp up, hold, ramp down, rest; ramp and rest share the
  // time left over after the hold equally.
  double excursion_s() const { return period_s / 2.0; }
  double ramp_s() const { return (excursion_s() - hold_s) / 3.0; }
  double duration_s() const { return lead_in_s + reps * excursion_s(); }
};

/// Commanded signed rotation (degrees, + = right) at time t.
inline double trajectory_truth_deg(const TrajectorySpec& spec, double t) {
  if (t < spec.lead_in_s || spec.reps == 0) return 0.0;
  const double rel = t - spec.lead_in_s;
  const int k = static_cast<int>(std::floor(rel / spec.excursion_s()));
  if (k >= spec.reps) return 0.0;
  const double u = rel - k * spec.excursion_s();
  const double ramp = spec.ramp_s();
  double mag = 0.0;
  if (u < ramp) {
    mag = spec.amplitude_deg * u / ramp;
  } else if (u < ramp + spec.hold_s) {
    mag = spec.amplitude_deg;
  } else if (u < 2 * ramp + spec.hold_s) {
    mag = spec.amplitude_deg * (1.0 - (u - ramp - spec.hold_s) / ramp);
  }
  const Side side = (k % 2 == 0) ? spec.first_side : opposite(spec.first_side);
  return side_sign(side) * mag;
}

/// Geometry of the synthetic seated subject, in normalized image units.
struct SyntheticBody {
  double hip_mid_x = 0.5;
  double hip_mid_y = 0.62;
  double hip_half_width = 0.08;
  double shoulder_mid_y = 0.32;
  double shoulder_half_width = 0.13;
  double knee_half_width = 0.09;
  double knee_depth = -0.20;
  double seated_knee_ratio = 0.3;
  double standing_knee_ratio = 0.8;
  double misaligned_tilt_deg = 20.0;

  double torso_length() const { return hip_mid_y - shoulder_mid_y; }
};

/// Builds one frame of the synthetic skeleton with the shoulders yawed by
/// `yaw_deg` about the vertical axis through the hip midpoint.
inline PoseFrame synthesize_pose(double yaw_deg, std::optional<PostureFault> fault,
                                 const SyntheticBody& body = {}) {
  using namespace skeleton;
  PoseFrame f;
  const double cx = body.hip_mid_x;
  for (auto& lm : f.landmarks) lm = {cx, 0.15, -0.05, 0.99};

  const double th = deg_to_rad(yaw_deg);
  const double w = body.shoulder_half_width;
  // Subject faces the camera: their left side appears at larger image x.
  double lx = w * std::cos(th), lz = w * std::sin(th);
  const double tilt = fault == PostureFault::ShoulderPelvisMisaligned
                          ? std::tan(deg_to_rad(body.misaligned_tilt_deg))
                          : 0.0;
  f[kLeftShoulder] = {cx + lx, body.shoulder_mid_y + lx * tilt, lz, 0.99};
  f[kRightShoulder] = {cx - lx, body.shoulder_mid_y - lx * tilt, -lz, 0.99};

  f[kLeftHip] = {cx + body.hip_half_width, body.hip_mid_y, 0.0, 0.99};
  f[kRightHip] = {cx - body.hip_half_width, body.hip_mid_y, 0.0, 0.99};

  const double ratio = fault == PostureFault::NotSeated ? body.standing_knee_ratio
                                                        : body.seated_knee_ratio;
  const double knee_y = body.hip_mid_y + ratio * body.torso_length();
  f[kLeftKnee] = {cx + body.knee_half_width, knee_y, body.knee_depth, 0.99};
  f[kRightKnee] = {cx - body.knee_half_width, knee_y, body.knee_depth, 0.99};

  // Arms hang from the shoulders, lower legs drop from the knees.
  const auto below = [](const Landmark& a, double dy) {
    return Landmark{a.x, a.y + dy, a.z, 0.95};
  };
  f[13] = below(f[kLeftShoulder], 0.14);
  f[14] = below(f[kRightShoulder], 0.14);
  f[15] = below(f[13], 0.12);
  f[16] = below(f[14], 0.12);
  for (std::size_t i = 17; i <= 22; ++i) f[i] = below(f[i % 2 ? 15 : 16], 0.03);
  f[27] = below(f[kLeftKnee], 0.2);
  f[28] = below(f[kRightKnee], 0.2);
  for (std::size_t i = 29; i <= 32; ++i) f[i] = below(f[i % 2 ? 27 : 28], 0.03);
  return f;
}

struct SyntheticFrame {
  PoseFrame frame;
  double truth_deg = 0.0;
  bool dropout = false;
  std::optional<PostureFault> fault;
};

/// Pull-based frame source for a TrajectorySpec.
class TrajectoryGenerator {
 public:
  explicit TrajectoryGenerator(TrajectorySpec spec, SyntheticBody body = {})
      : spec_(std::move(spec)), body_(body), rng_(spec_.seed) {
    spec_.validate();
    total_ = static_cast<std::size_t>(std::floor(spec_.duration_s() * spec_.fps + 1e-9)) + 1;
  }

  std::optional<SyntheticFrame> next() {
    if (index_ >= total_) return std::nullopt;
    const double t = static_cast<double>(index_) / spec_.fps;
    SyntheticFrame out;
    out.truth_deg = trajectory_truth_deg(spec_, t);
    const double noise = rng_.normal(0.0, 1.0) * spec_.noise_deg;
    for (const auto& seg : spec_.posture_fault_segments) {
      if (t >= seg.start_s && t < seg.end_s) out.fault = seg.kind;
    }
    out.frame = synthesize_pose(out.truth_deg + noise, out.fault, body_);
    out.frame.timestamp_us = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(index_) * 1e6 / spec_.fps));
    out.frame.seq = spec_.first_seq + static_cast<std::uint32_t>(index_);
    for (const auto& seg : spec_.dropout_segments) {
      if (seg.contains(t)) out.dropout = true;
    }
    if (out.dropout) {
      for (auto& lm : out.frame.landmarks) lm.visibility = 0.0;
    }
    ++index_;
    return out;
  }

  std::size_t size() const { return total_; }
  const TrajectorySpec& spec() const { return spec_; }

 private:
  TrajectorySpec spec_;
  SyntheticBody body_;
  Rng rng_;
  std::size_t total_ = 0;
  std::size_t index_ = 0;
};

inline std::vector<SyntheticFrame> generate_trajectory(const TrajectorySpec& spec) {
  TrajectoryGenerator gen(spec);
  std::vector<SyntheticFrame> out;
  out.reserve(gen.size());
  while (auto f = gen.next()) out.push_back(std::move(*f));
  return out;
}

inline nlohmann::json to_json(const TrajectorySpec& s) {
  nlohmann::json drops = nlohmann::json::array();
  for (const auto& d : s.dropout_segments) drops.push_back({d.start_s, d.end_s});
  nlohmann::json faults = nlohmann::json::array();
  for (const auto& f : s.posture_fault_segments) {
    faults.push_back({f.start_s, f.end_s, std::string(to_string(f.kind))});
  }
  return {{"amplitude_deg", s.amplitude_deg},
          {"period_s", s.period_s},
          {"hold_s", s.hold_s},
          {"reps", s.reps},
          {"fps", s.fps},
          {"noise_deg", s.noise_deg},
          {"dropout_segments", drops},
          {"posture_fault_segments", faults},
          {"seed", s.seed},
          {"lead_in_s", s.lead_in_s},
          {"first_side", std::string(to_string(s.first_side))},
          {"first_seq", s.first_seq}};
}

inline TrajectorySpec trajectory_spec_from_json(const nlohmann::json& j) {
  TrajectorySpec s;
  s.amplitude_deg = j.value("amplitude_deg", s.amplitude_deg);
  s.period_s = j.value("period_s", s.period_s);
  s.hold_s = j.value("hold_s", s.hold_s);
  s.reps = j.value("reps", s.reps);
  s.fps = j.value("fps", s.fps);
  s.noise_deg = j.value("noise_deg", s.noise_deg);
  s.seed = j.value("seed", s.seed);
  s.lead_in_s = j.value("lead_in_s", s.lead_in_s);
  s.first_seq = j.value("first_seq", s.first_seq);
  const auto side = j.value("first_side", std::string("right"));
  if (side != "right" && side != "left") throw std::invalid_argument("first_side must be right or left");
  s.first_side = side == "right" ? Side::Right : Side::Left;
  if (j.contains("dropout_segments")) {
    for (const auto& d : j.at("dropout_segments")) {
      s.dropout_segments.push_back({d.at(0).get<double>(), d.at(1).get<double>()});
    }
  }
  if (j.contains("posture_fault_segments")) {
    for (const auto& f : j.at("posture_fault_segments")) {
      const auto kind = f.at(2).get<std::string>();
      if (kind != "not_seated" && kind != "misaligned") {
        throw std::invalid_argument("posture fault kind must be not_seated or misaligned");
      }
      s.posture_fault_segments.push_back(
          {f.at(0).get<double>(), f.at(1).get<double>(),
           kind == "not_seated" ? PostureFault::NotSeated
                                : PostureFault::ShoulderPelvisMisaligned});
    }
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Packet streams, impairment, recordings

struct TimedPacket {
  std::uint64_t at_us = 0;  // arrival offset from the start of the stream
  Bytes bytes;

  friend bool operator==(const TimedPacket&, const TimedPacket&) = default;
};

/// Encodes frames as pose packets arriving at their capture timestamps.
inline std::vector<TimedPacket> to_packets(const std::vector<SyntheticFrame>& frames) {
  std::vector<TimedPacket> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back({f.frame.timestamp_us, encode_pose(f.frame)});
  return out;
}

struct ImpairmentSpec {
  double loss_rate = 0.0;
  double reorder_rate = 0.0;
  double duplicate_rate = 0.0;
  double jitter_ms = 0.0;
  // Extra delay applied to packets picked for reordering.
  double reorder_delay_ms = 100.0;
  std::uint64_t seed = 1;

  void validate() const {
    for (double r : {loss_rate, reorder_rate, duplicate_rate}) {
      if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("impairment rates must be in [0, 1)");
    }
    if (!(jitter_ms >= 0.0 && reorder_delay_ms >= 0.0)) {
      throw std::invalid_argument("jitter_ms and reorder_delay_ms must be >= 0");
    }
  }
};

inline nlohmann::json to_json(const ImpairmentSpec& s) {
  return {{"loss_rate", s.loss_rate},         {"reorder_rate", s.reorder_rate},
          {"duplicate_rate", s.duplicate_rate}, {"jitter_ms", s.jitter_ms},
          {"reorder_delay_ms", s.reorder_delay_ms}, {"seed", s.seed}};
}

inline ImpairmentSpec impairment_spec_from_json(const nlohmann::json& j) {
  ImpairmentSpec s;
  s.loss_rate = j.value("loss_rate", s.loss_rate);
  s.reorder_rate = j.value("reorder_rate", s.reorder_rate);
  s.duplicate_rate = j.value("duplicate_rate", s.duplicate_rate);
  s.jitter_ms = j.value("jitter_ms", s.jitter_ms);
  s.reorder_delay_ms = j.value("reorder_delay_ms", s.reorder_delay_ms);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

/// Applies loss, duplication, reordering and jitter. Six uniforms are drawn
/// per input packet regardless of outcome, so a seed yields the same decisions
/// for the same packet index across rate settings.
inline std::vector<TimedPacket> impair(const std::vector<TimedPacket>& in,
                                       const ImpairmentSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  struct Pending {
    double at_us;
    std::size_t order;
    const Bytes* bytes;
  };
  std::vector<Pending> pending;
  pending.reserve(in.size() + in.size() / 4);
  for (const auto& p : in) {
    const double u_loss = rng.uniform();
    const double u_dup = rng.uniform();
    const double u_reorder = rng.uniform();
    const double u_jitter = rng.uniform();
    const double u_extra = rng.uniform();
    const double u_dup_jitter = rng.uniform();
    if (u_loss < spec.loss_rate) continue;
    double at = static_cast<double>(p.at_us) + u_jitter * spec.jitter_ms * 1000.0;
    if (u_reorder < spec.reorder_rate) {
      at += (0.5 + 0.5 * u_extra) * spec.reorder_delay_ms * 1000.0;
    }
    pending.push_back({at, pending.size(), &p.bytes});
    if (u_dup < spec.duplicate_rate) {
      const double dup_at = at + u_dup_jitter * spec.jitter_ms * 1000.0;
      pending.push_back({dup_at, pending.size(), &p.bytes});
    }
  }
  std::stable_sort(pending.begin(), pending.end(),
                   [](const Pending& a, const Pending& b) { return a.at_us < b.at_us; });
  std::vector<TimedPacket> out;
  out.reserve(pending.size());
  for (const auto& p : pending) {
    out.push_back({static_cast<std::uint64_t>(std::llround(p.at_us)), *p.bytes});
  }
  return out;
}

class RecordingError : public std::runtime_error {
 public:
  RecordingError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

inline constexpr char kRecordingMagic[8] = {'T', 'S', 'H', 'F', 'R', 'E', 'C', '1'};

/// A recorded packet stream. On disk: 8-byte magic, u32 header length, JSON
/// header, then records of {u32 arrival delta in us, 546-byte pose packet}.
struct Recording {
  nlohmann::json header = nlohmann::json::object();
  std::vector<TimedPacket> packets;
};

inline Bytes serialize_recording(const Recording& rec) {
  auto header = rec.header;
  header["format"] = "tshfrec";
  header["protocol_version"] = wire::kVersion;
  header["rng"] = Rng::kAlgorithm;
  header["packet_count"] = rec.packets.size();
  const std::string text = header.dump();
  detail::LeWriter w(12 + text.size() + rec.packets.size() * (4 + wire::kPosePacketSize));
  w.bytes(ByteView(reinterpret_cast<const std::uint8_t*>(kRecordingMagic), 8));
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  std::uint64_t prev = 0;
  for (const auto& p : rec.packets) {
    if (p.bytes.size() != wire::kPosePacketSize) {
      throw std::invalid_argument("recordings hold pose packets only");
    }
    if (p.at_us < prev || p.at_us - prev > std::numeric_limits<std::uint32_t>::max()) {
      throw std::invalid_argument("packet arrival times must be non-decreasing");
    }
    w.u32(static_cast<std::uint32_t>(p.at_us - prev));
    w.bytes(p.bytes);
    prev = p.at_us;
  }
  return std::move(w).take();
}

inline Recording parse_recording(ByteView b) {
  if (b.size() < 12) throw RecordingError("truncated recording header", b.size());
  if (!std::equal(kRecordingMagic, kRecordingMagic + 8, b.begin())) {
    throw RecordingError("not a recording (bad magic)", 0);
  }
  detail::LeReader r(b.subspan(8, 4));
  const std::uint32_t header_len = r.u32();
  if (12 + static_cast<std::uint64_t>(header_len) > b.size()) {
    throw RecordingError("truncated JSON header", b.size());
  }
  Recording rec;
  try {
    rec.header = nlohmann::json::parse(b.begin() + 12, b.begin() + 12 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw RecordingError(std::string("malformed JSON header: ") + e.what(), 12);
  }
  if (rec.header.value("protocol_version", 0) != wire::kVersion) {
    throw RecordingError("unsupported protocol version", 12);
  }
  std::size_t pos = 12 + header_len;
  std::uint64_t at = 0;
  constexpr std::size_t kRecord = 4 + wire::kPosePacketSize;
  while (pos < b.size()) {
    if (b.size() - pos < kRecord) throw RecordingError("truncated packet record", pos);
    at += detail::LeReader(b.subspan(pos, 4)).u32();
    auto packet = b.subspan(pos + 4, wire::kPosePacketSize);
    if (auto d = decode_pose(packet); !d) {
      throw RecordingError("invalid pose packet (" + std::string(to_string(d.error())) + ")",
                           pos + 4);
    }
    rec.packets.push_back({at, Bytes(packet.begin(), packet.end())});
    pos += kRecord;
  }
  if (rec.header.contains("packet_count") &&
      rec.header["packet_count"].get<std::size_t>() != rec.packets.size()) {
    throw RecordingError("packet count does not match header", pos);
  }
  return rec;
}

inline void write_recording(const Recording& rec, const std::filesystem::path& path) {
  const auto bytes = serialize_recording(rec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline Bytes read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline Recording read_recording(const std::filesystem::path& path) {
  return parse_recording(read_file_bytes(path));
}

inline constexpr double kAsFastAsPossible = std::numeric_limits<double>::infinity();

/// Yields the packets of a recording, sleeping so that arrival gaps are
/// reproduced scaled by 1/speed. An infinite speed never sleeps.
class ReplayCursor {
 public:
  ReplayCursor(const Recording& rec, double speed) : rec_(rec), speed_(speed) {
    if (!(speed > 0.0)) throw std::invalid_argument("replay speed must be > 0");
  }

  const TimedPacket* next() {
    if (index_ >= rec_.packets.size()) return nullptr;
    const auto& p = rec_.packets[index_++];
    if (std::isfinite(speed_)) {
      if (!started_) {
        start_ = std::chrono::steady_clock::now();
        first_at_ = p.at_us;
        started_ = true;
      }
      const auto due = start_ + std::chrono::microseconds(static_cast<std::int64_t>(
                                    static_cast<double>(p.at_us - first_at_) / speed_));
      std::this_thread::sleep_until(due);
    }
    return &p;
  }

 private:
  const Recording& rec_;
  double speed_;
  std::size_t index_ = 0;
  bool started_ = false;
  std::chrono::steady_clock::time_point start_;
  std::uint64_t first_at_ = 0;
};

}  // namespace seatrot
