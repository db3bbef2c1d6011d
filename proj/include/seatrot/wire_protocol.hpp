#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "seatrot/exercise_fsm.hpp"
#include "seatrot/pose_model.hpp"
#include "seatrot/scoring.hpp"

namespace seatrot {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

namespace wire {

inline constexpr std::array<std::uint8_t, 4> kMagic = {'T', 'S', 'H', 'F'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::uint8_t kKindPose = 0x01;
inline constexpr std::uint8_t kKindFeedback = 0x02;
inline constexpr std::size_t kHeaderSize = 18;
inline constexpr std::size_t kLandmarkSize = 16;
inline constexpr std::size_t kPosePacketSize = kHeaderSize + kLandmarkCount * kLandmarkSize;
inline constexpr std::size_t kFeedbackPacketSize = 41;

static_assert(kPosePacketSize == 546);

// posture_flags bits
inline constexpr std::uint8_t kFlagNotSeated = 1u << 0;
inline constexpr std::uint8_t kFlagMisaligned = 1u << 1;
inline constexpr std::uint8_t kFlagOverRotated = 1u << 2;
inline constexpr std::uint8_t kFlagDropout = 1u << 3;

inline constexpr std::uint16_t kDefaultPosePort = 9750;
inline constexpr std::uint16_t kDefaultFeedbackPort = 9751;
inline constexpr std::uint16_t kDefaultBridgePort = 9752;

}  // namespace wire

enum class ProtocolError : std::uint8_t { BadMagic, BadVersion, BadKind, BadLength };

inline std::string_view to_string(ProtocolError e) {
  switch (e) {
    case ProtocolError::BadMagic: return "BadMagic";
    case ProtocolError::BadVersion: return "BadVersion";
    case ProtocolError::BadKind: return "BadKind";
    case ProtocolError::BadLength: return "BadLength";
  }
  return "?";
}

class ProtocolException : public std::runtime_error {
 public:
  explicit ProtocolException(ProtocolError e)
      : std::runtime_error("protocol error: " + std::string(to_string(e))), error_(e) {}
  ProtocolError error() const { return error_; }

 private:
  ProtocolError error_;
};

/// Either a decoded value or the reason the bytes were rejected.
template <typename T>
class Decoded {
 public:
  Decoded(T value) : v_(std::move(value)) {}
  Decoded(ProtocolError e) : v_(e) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& {
    if (!ok()) throw ProtocolException(error());
    return std::get<T>(v_);
  }
  T&& value() && {
    if (!ok()) throw ProtocolException(error());
    return std::get<T>(std::move(v_));
  }
  ProtocolError error() const { return std::get<ProtocolError>(v_); }

 private:
  std::variant<T, ProtocolError> v_;
};

/// Engine-to-display state, one per processed pose frame.
struct FeedbackPacket {
  std::uint32_t seq = 0;
  std::uint64_t timestamp_us = 0;
  ExercisePhase phase = ExercisePhase::Neutral;
  float angle_deg = 0.0f;
  float hold_progress = 0.0f;
  std::int32_t total_score = 0;
  std::uint16_t current_streak = 0;
  std::uint16_t rep_count = 0;
  std::uint8_t posture_flags = 0;
  std::uint16_t prompt_code = 0;
  std::uint8_t audio_cue = 0;

  friend bool operator==(const FeedbackPacket&, const FeedbackPacket&) = default;
};

namespace detail {

class LeWriter {
 public:
  explicit LeWriter(std::size_t size) { buf_.reserve(size); }

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) {
    if (b.empty()) return;
    const auto at = buf_.size();
    buf_.resize(at + b.size());
    std::memcpy(buf_.data() + at, b.data(), b.size());
  }

  Bytes take() && { return std::move(buf_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes buf_;
};

class LeReader {
 public:
  explicit LeReader(ByteView b) : b_(b) {}

  std::uint8_t u8() { return b_[pos_++]; }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  void skip(std::size_t n) { pos_ += n; }

 private:
  std::uint64_t get(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{b_[pos_ + i]} << (8 * i);
    pos_ += n;
    return v;
  }
  ByteView b_;
  std::size_t pos_ = 0;
};

inline void write_header(LeWriter& w, std::uint8_t kind, std::uint32_t seq,
                         std::uint64_t ts) {
  w.bytes(wire::kMagic);
  w.u8(wire::kVersion);
  w.u8(kind);
  w.u32(seq);
  w.u64(ts);
}

// Header checks run in a fixed order so every malformed input gets exactly
// one classification.
inline std::optional<ProtocolError> check_header(ByteView b, std::uint8_t kind,
                                                 std::size_t size) {
  if (b.size() < 6) return ProtocolError::BadLength;
  if (!std::equal(wire::kMagic.begin(), wire::kMagic.end(), b.begin())) {
    return ProtocolError::BadMagic;
  }
  if (b[4] != wire::kVersion) return ProtocolError::BadVersion;
  if (b[5] != kind) return ProtocolError::BadKind;
  if (b.size() != size) return ProtocolError::BadLength;
  return std::nullopt;
}

}  // namespace detail

/// Fixed 546-byte little-endian pose datagram. Coordinates travel as f32.
inline Bytes encode_pose(const PoseFrame& f) {
  detail::LeWriter w(wire::kPosePacketSize);
  detail::write_header(w, wire::kKindPose, f.seq, f.timestamp_us);
  for (const auto& lm : f.landmarks) {
    w.f32(static_cast<float>(lm.x));
    w.f32(static_cast<float>(lm.y));
    w.f32(static_cast<float>(lm.z));
    w.f32(static_cast<float>(lm.visibility));
  }
  return std::move(w).take();
}

inline Decoded<PoseFrame> decode_pose(ByteView b) {
  if (auto err = detail::check_header(b, wire::kKindPose, wire::kPosePacketSize)) {
    return *err;
  }
  detail::LeReader r(b);
  r.skip(6);
  PoseFrame f;
  f.seq = r.u32();
  f.timestamp_us = r.u64();
  for (auto& lm : f.landmarks) {
    lm.x = r.f32();
    lm.y = r.f32();
    lm.z = r.f32();
    lm.visibility = r.f32();
  }
  return f;
}

/// Fixed 41-byte little-endian feedback datagram. The last two bytes are
/// reserved and always zero.
inline Bytes encode_feedback(const FeedbackPacket& p) {
  detail::LeWriter w(wire::kFeedbackPacketSize);
  detail::write_header(w, wire::kKindFeedback, p.seq, p.timestamp_us);
  w.u8(static_cast<std::uint8_t>(p.phase));
  w.f32(p.angle_deg);
  w.f32(p.hold_progress);
  w.i32(p.total_score);
  w.u16(p.current_streak);
  w.u16(p.rep_count);
  w.u8(p.posture_flags);
  w.u16(p.prompt_code);
  w.u8(p.audio_cue);
  w.u8(0);
  w.u8(0);
  return std::move(w).take();
}

inline Decoded<FeedbackPacket> decode_feedback(ByteView b) {
  if (auto err =
          detail::check_header(b, wire::kKindFeedback, wire::kFeedbackPacketSize)) {
    return *err;
  }
  detail::LeReader r(b);
  r.skip(6);
  FeedbackPacket p;
  p.seq = r.u32();
  p.timestamp_us = r.u64();
  p.phase = static_cast<ExercisePhase>(r.u8());
  p.angle_deg = r.f32();
  p.hold_progress = r.f32();
  p.total_score = r.i32();
  p.current_streak = r.u16();
  p.rep_count = r.u16();
  p.posture_flags = r.u8();
  p.prompt_code = r.u16();
  p.audio_cue = r.u8();
  return p;
}

/// Identifies the packet kind from the header without a full decode.
inline std::optional<std::uint8_t> peek_kind(ByteView b) {
  if (b.size() < 6 || !std::equal(wire::kMagic.begin(), wire::kMagic.end(), b.begin())) {
    return std::nullopt;
  }
  return b[5];
}

enum class SeqDecision { Accept, DropStale };

/// Latest-wins ordering: accept only sequence numbers strictly newer than the
/// last accepted one, comparing modulo 2^32.
constexpr SeqDecision accept_frame(std::uint32_t last_seq, std::uint32_t incoming_seq) {
  const auto diff = static_cast<std::int32_t>(incoming_seq - last_seq);
  return diff > 0 ? SeqDecision::Accept : SeqDecision::DropStale;
}

class SequenceGate {
 public:
  SeqDecision offer(std::uint32_t seq) {
    if (last_ && accept_frame(*last_, seq) == SeqDecision::DropStale) {
      ++dropped_;
      return SeqDecision::DropStale;
    }
    last_ = seq;
    return SeqDecision::Accept;
  }

  std::optional<std::uint32_t> last() const { return last_; }
  std::uint64_t dropped() const { return dropped_; }
  void reset() { last_.reset(); }

 private:
  std::optional<std::uint32_t> last_;
  std::uint64_t dropped_ = 0;
};

// Stream bridge framing: u32 little-endian length, then the payload.
inline constexpr std::size_t kMaxFrameSize = 64 * 1024;

inline Bytes frame_message(ByteView payload) {
  if (payload.size() > kMaxFrameSize) throw std::length_error("bridge frame too large");
  detail::LeWriter w(4 + payload.size());
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.bytes(payload);
  return std::move(w).take();
}

inline Bytes frame_message(std::string_view text) {
  return frame_message(
      ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

/// Reassembles length-prefixed messages from an arbitrary chunking of bytes.
class FrameReader {
 public:
  void feed(ByteView chunk) {
    if (head_ > 0 && head_ == buf_.size()) {
      buf_.clear();
      head_ = 0;
    }
    buf_.insert(buf_.end(), chunk.begin(), chunk.end());
  }

  std::optional<Bytes> next() {
    if (buffered() < 4) return std::nullopt;
    const std::uint32_t len = detail::LeReader(ByteView(buf_.data() + head_, 4)).u32();
    if (len > kMaxFrameSize) throw std::length_error("bridge frame too large");
    if (buffered() < 4 + static_cast<std::size_t>(len)) return std::nullopt;
    const auto start = buf_.begin() + static_cast<std::ptrdiff_t>(head_ + 4);
    Bytes msg(start, start + len);
    head_ += 4 + len;
    // Compact once the consumed prefix dominates the buffer.
    if (head_ * 2 > buf_.size()) {
      buf_.assign(buf_.begin() + static_cast<std::ptrdiff_t>(head_), buf_.end());
      head_ = 0;
    }
    return msg;
  }

  std::size_t buffered() const { return buf_.size() - head_; }

 private:
  Bytes buf_;
  std::size_t head_ = 0;
};

inline std::string_view as_text(const Bytes& b) {
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

}  // namespace seatrot
