// Regenerates the recordings and session logs under fixtures/.
//
//   gen_fixtures <fixtures-dir>
//
// Everything is derived from seeded trajectory specs, so running this twice
// produces identical files.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "seatrot/seatrot.hpp"

namespace fs = std::filesystem;
using namespace seatrot;

namespace {

Recording make_recording(const TrajectorySpec& spec, const std::string& start_time,
                         const std::optional<ImpairmentSpec>& imp = std::nullopt) {
  Recording rec;
  rec.packets = to_packets(generate_trajectory(spec));
  rec.header["trajectory"] = to_json(spec);
  rec.header["start_time"] = start_time;
  if (imp) {
    rec.packets = impair(rec.packets, *imp);
    rec.header["impairment"] = to_json(*imp);
  }
  return rec;
}

SessionLog replay_log(const Recording& rec) {
  return process_packets(rec.packets, EngineConfig{}, recording_start_time(rec));
}


// A hand-authored log: rep 1 is the documented example rep, and the rest
// make total_score 50 and a best streak of 3 consistent with the rules.
SessionLog golden_log() {
  SessionLog log;
  log.start_time = parse_utc("2025-01-15T10:30:45Z");
  log.end_time = parse_utc("2025-01-15T10:32:05Z");
  auto rep = [](int id, double angle, double hold, bool correct, bool excellent, Side side) {
    RepRecord r;
    r.rep_id = id;
    r.angle = angle;
    r.hold_duration = hold;
    r.correct = correct;
    r.excellent = excellent;
    r.side = side;
    return r;
  };
  log.reps = {rep(1, 42.8, 2.5, true, true, Side::Right),
              rep(2, 46.1, 2.6, true, true, Side::Left),
              rep(3, 36.4, 2.4, true, false, Side::Right),
              rep(4, 44.0, 2.2, true, true, Side::Left)};
  log.events = {{parse_utc("2025-01-15T10:31:31.200Z"), "posture_fault", "not_seated"}};
  log.total_score = 50;
  log.streaks = 3;
  return log;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_fixtures <fixtures-dir>\n";
    return 1;
  }
  const fs::path dir = argv[1];
  fs::create_directories(dir / "sessions");
  fs::create_directories(dir / "malformed");
  fs::create_directories(dir / "corrupt_sessions");

  // Five clean excursions at 45 degrees, 2.5 s holds.
  const auto perfect_spec_json = read_file_bytes(dir / "perfect-5-reps.spec.json");
  const auto perfect_spec = trajectory_spec_from_json(nlohmann::json::parse(
      std::string(perfect_spec_json.begin(), perfect_spec_json.end())));
  const auto perfect = make_recording(perfect_spec, "2025-01-15T10:30:45Z");
  write_recording(perfect, dir / "perfect-5-reps.tshfrec");
  const auto perfect_log = replay_log(perfect);
  write_session(perfect_log, dir / "perfect-5-reps.expected.json");

  // A shorter recording for speed-sensitive tests.
  TrajectorySpec short_spec = perfect_spec;
  short_spec.reps = 2;
  short_spec.lead_in_s = 0.5;
  const auto short_rec = make_recording(short_spec, "2025-01-15T11:00:00Z");
  write_recording(short_rec, dir / "short-2-reps.tshfrec");

  // Truncated copy of the perfect recording (cut inside a packet record).
  {
    auto bytes = serialize_recording(perfect);
    bytes.resize(bytes.size() - 100);
    std::ofstream out(dir / "malformed" / "truncated.tshfrec", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }

  // Sessions for the analytics examples.
  write_session(perfect_log, dir / "sessions" / session_filename(perfect_log));

  TrajectorySpec over = perfect_spec;
  over.amplitude_deg = 70.0;
  const auto over_log = replay_log(make_recording(over, "2025-01-16T09:15:00Z"));
  write_session(over_log, dir / "sessions" / session_filename(over_log));

  TrajectorySpec mixed = perfect_spec;
  mixed.reps = 8;
  mixed.noise_deg = 1.0;
  mixed.seed = 7;
  mixed.posture_fault_segments = {{14.0, 15.0, PostureFault::NotSeated}};
  mixed.dropout_segments = {{26.0, 26.5}};
  const auto mixed_log = replay_log(make_recording(mixed, "2025-01-17T18:40:00Z"));
  write_session(mixed_log, dir / "sessions" / session_filename(mixed_log));

  write_session(golden_log(), dir / "golden_log.json");

  write_text_file(dir / "corrupt_sessions" / "seated-2025-01-18T08-00-00Z.json",
                  "{\"exercise\": \"seated\", \"start_time\": \"2025-01-18T08:00:00Z\", \"reps\": [");

  std::cout << "perfect: " << perfect_log.reps.size() << " reps, score " << perfect_log.total_score
            << "\nover-rotation: " << over_log.reps.size() << " reps\nmixed: "
            << mixed_log.reps.size() << " reps, score " << mixed_log.total_score << "\n";
  return 0;
}
