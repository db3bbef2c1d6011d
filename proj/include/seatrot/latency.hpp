#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "seatrot/synth_replay.hpp"

namespace seatrot {

enum class Stage : std::uint8_t { Decode, Condition, Kinematics, FsmScore, Encode, EndToEnd };

inline constexpr std::array<Stage, 6> kStages = {Stage::Decode,   Stage::Condition,
                                                 Stage::Kinematics, Stage::FsmScore,
                                                 Stage::Encode,   Stage::EndToEnd};

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Decode: return "decode";
    case Stage::Condition: return "condition";
    case Stage::Kinematics: return "kinematics";
    case Stage::FsmScore: return "fsm_score";
    case Stage::Encode: return "encode";
    case Stage::EndToEnd: return "end_to_end";
  }
  return "?";
}

struct Percentiles {
  double p50_us = 0.0;
  double p95_us = 0.0;
  double p99_us = 0.0;
  std::uint64_t samples = 0;
};

/// Fixed-size uniform sample of a timing series (Vitter's algorithm R).
class Reservoir {
 public:
  explicit Reservoir(std::size_t capacity = 8192, std::uint64_t seed = 7)
      : capacity_(capacity), rng_(seed) {
    values_.reserve(capacity);
  }

  void add(double v) {
    ++seen_;
    if (values_.size() < capacity_) {
      values_.push_back(v);
      return;
    }
    const auto j = static_cast<std::uint64_t>(rng_.uniform() * static_cast<double>(seen_));
    if (j < capacity_) values_[j] = v;
  }

  Percentiles percentiles() const {
    Percentiles p;
    p.samples = seen_;
    if (values_.empty()) return p;
    auto sorted = values_;
    std::sort(sorted.begin(), sorted.end());
    auto at = [&](double q) {
      const auto idx = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1) + 0.5);
      return sorted[std::min(idx, sorted.size() - 1)];
    };
    p.p50_us = at(0.50);
    p.p95_us = at(0.95);
    p.p99_us = at(0.99);
    return p;
  }

 private:
  std::size_t capacity_;
  Rng rng_;
  std::vector<double> values_;
  std::uint64_t seen_ = 0;
};

struct LatencyStats {
  std::array<Reservoir, kStages.size()> stages;
  std::uint64_t frames_processed = 0;
  std::uint64_t frames_dropped_stale = 0;
  std::uint64_t frames_malformed = 0;
  std::uint64_t frames_dropped_backlog = 0;

  void record(Stage s, double us) { stages[static_cast<std::size_t>(s)].add(us); }
  Percentiles of(Stage s) const { return stages[static_cast<std::size_t>(s)].percentiles(); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    for (auto s : kStages) {
      const auto p = of(s);
      j["stages"][std::string(to_string(s))] = {
          {"p50_us", p.p50_us}, {"p95_us", p.p95_us}, {"p99_us", p.p99_us}, {"samples", p.samples}};
    }
    j["frames_processed"] = frames_processed;
    j["frames_dropped_stale"] = frames_dropped_stale;
    j["frames_malformed"] = frames_malformed;
    j["frames_dropped_backlog"] = frames_dropped_backlog;
    return j;
  }
};

/// Measures one stage with the monotonic clock.
class StageTimer {
 public:
  StageTimer() : t0_(std::chrono::steady_clock::now()) {}

  double lap_us() {
    const auto now = std::chrono::steady_clock::now();
    const double us = std::chrono::duration<double, std::micro>(now - t0_).count();
    t0_ = now;
    return us;
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace seatrot
