// seatrot: engine, replay, synthesis, analysis and protocol inspection.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "seatrot/analysis.hpp"
#include "seatrot/seatrot.hpp"

namespace {

using namespace seatrot;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

double parse_speed(std::string s) {
  if (!s.empty() && (s.back() == 'x' || s.back() == 'X')) s.pop_back();
  if (s == "inf" || s == "max") return kAsFastAsPossible;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && v > 0.0) return v;
  } catch (const std::exception&) {
  }
  throw CLI::ValidationError("--speed", "expected a positive number or 'inf'");
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) return {"127.0.0.1", static_cast<std::uint16_t>(std::stoi(s))};
  return {s.substr(0, colon), static_cast<std::uint16_t>(std::stoi(s.substr(colon + 1)))};
}

void write_bytes(const std::string& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// serve

EngineService* g_service = nullptr;

extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

struct EngineFlags {
  std::string config_file;
  std::optional<std::uint16_t> listen;
  std::optional<std::string> bind;
  std::optional<std::string> feedback;
  std::optional<std::uint16_t> bridge;
  std::optional<std::string> sessions;
  std::optional<double> idle;
  std::optional<std::string> prompts;
};

void add_engine_flags(CLI::App* app, EngineFlags& f) {
  app->add_option("--config", f.config_file, "engine config JSON")->check(CLI::ExistingFile);
  app->add_option("--listen", f.listen, "UDP port for pose packets (default 9750)");
  app->add_option("--bind", f.bind, "address to bind (default 0.0.0.0)");
  app->add_option("--feedback", f.feedback, "display address host:port (default 127.0.0.1:9751)");
  app->add_option("--bridge", f.bridge, "UI bridge TCP port (default 9752)");
  app->add_option("--sessions", f.sessions, "sessions directory (env SEATROT_SESSIONS_DIR)");
  app->add_option("--idle-timeout", f.idle, "seconds without trackable frames before a session closes");
  app->add_option("--prompts", f.prompts, "KEY=text prompt table")->check(CLI::ExistingFile);
}

EngineConfig build_engine_config(const EngineFlags& f) {
  EngineConfig cfg;
  if (const char* env = std::getenv("SEATROT_SESSIONS_DIR"); env && *env) cfg.sessions_dir = env;
  if (!f.config_file.empty()) cfg = engine_config_from_json(read_json_file(f.config_file), cfg);
  if (f.listen) cfg.listen_port = *f.listen;
  if (f.bind) cfg.bind_host = *f.bind;
  if (f.feedback) std::tie(cfg.feedback_host, cfg.feedback_port) = parse_endpoint(*f.feedback);
  if (f.bridge) cfg.ui_bridge_port = *f.bridge;
  if (f.sessions) cfg.sessions_dir = *f.sessions;
  if (f.idle) cfg.idle_timeout_s = *f.idle;
  if (f.prompts) cfg.prompts_file = *f.prompts;
  cfg.validate();
  return cfg;
}

int cmd_serve(const EngineFlags& flags) {
  const auto cfg = build_engine_config(flags);
  EngineService service(cfg);
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "seatrot: pose udp :" << service.pose_port() << ", bridge tcp :"
            << service.bridge_port() << ", feedback -> " << cfg.feedback_host << ":"
            << cfg.feedback_port << ", sessions in " << cfg.sessions_dir << "\n";
  service.run();
  g_service = nullptr;
  std::cerr << "seatrot: stats " << service.stats_json().dump() << "\n";
  if (auto f = service.last_session_file()) std::cerr << "seatrot: last session " << f->string() << "\n";
  return service.write_failures() == 0 ? kExitOk : kExitData;
}

// ---------------------------------------------------------------------------
// replay

struct ReplayFlags {
  std::string file;
  std::string speed = "inf";
  std::string to;
  std::string out;
  std::string feedback_out;
  std::string start_time;
  EngineFlags engine;
};

int cmd_replay(const ReplayFlags& f) {
  const double speed = parse_speed(f.speed);
  const auto rec = read_recording(f.file);
  ReplayCursor cursor(rec, speed);

  if (!f.to.empty()) {
    const auto [host, port] = parse_endpoint(f.to);
    net::UdpSocket sock;
    const auto dest = net::resolve_ipv4(host, port);
    std::size_t sent = 0;
    while (const auto* p = cursor.next()) {
      sock.send_to(p->bytes, dest);
      ++sent;
    }
    std::cerr << "seatrot: sent " << sent << " packets to " << host << ":" << port << "\n";
    return kExitOk;
  }

  const auto cfg = build_engine_config(f.engine);
  const UtcMillis start = f.start_time.empty() ? recording_start_time(rec) : parse_utc(f.start_time);
  SessionProcessor proc(cfg, start);
  Bytes feedback;
  while (const auto* p = cursor.next()) {
    auto out = proc.on_datagram(p->bytes);
    if (out.status == FrameStatus::Processed) {
      feedback.insert(feedback.end(), out.feedback_bytes.begin(), out.feedback_bytes.end());
    }
  }
  const auto log = proc.snapshot();
  if (auto problem = check_session_log(log)) throw DataError("replay produced an invalid log: " + *problem);
  if (f.out.empty()) {
    std::cout << serialize_session(log);
  } else {
    write_session(log, f.out);
  }
  if (!f.feedback_out.empty()) write_bytes(f.feedback_out, feedback);
  const auto& st = proc.stats();
  std::cerr << "seatrot: " << st.frames_processed << " frames, " << st.frames_dropped_stale
            << " stale, " << st.frames_malformed << " malformed, " << log.reps.size()
            << " reps, score " << log.total_score << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

struct SynthFlags {
  std::string spec;
  std::string out;
  std::string impair;
  std::string start_time;
};

int cmd_synth(const SynthFlags& f) {
  const auto j = read_json_file(f.spec);
  TrajectorySpec spec;
  std::optional<ImpairmentSpec> imp;
  std::string start = "2024-01-01T10:00:00Z";
  try {
    spec = trajectory_spec_from_json(j.contains("trajectory") ? j.at("trajectory") : j);
    if (j.contains("impairment")) imp = impairment_spec_from_json(j.at("impairment"));
    if (!f.impair.empty()) imp = impairment_spec_from_json(read_json_file(f.impair));
    start = j.value("start_time", start);
    if (!f.start_time.empty()) start = f.start_time;
    parse_utc(start);
  } catch (const std::exception& e) {
    throw DataError(f.spec + ": " + e.what());
  }
  Recording rec;
  rec.packets = to_packets(generate_trajectory(spec));
  rec.header["trajectory"] = to_json(spec);
  rec.header["start_time"] = start;
  if (imp) {
    rec.packets = impair(rec.packets, *imp);
    rec.header["impairment"] = to_json(*imp);
  }
  write_recording(rec, f.out);
  std::cerr << "seatrot: wrote " << rec.packets.size() << " packets to " << f.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeFlags {
  std::string dir;
  std::string sus;
  std::string geq;
  std::string map;
  bool json = false;
};

int cmd_analyze(const AnalyzeFlags& f) {
  AnalysisReport rep;
  try {
    rep = analyze_sessions(load_session_dir(f.dir));
    if (!f.sus.empty()) add_sus(rep, sus_from_csv(read_csv(f.sus)));
    if (!f.geq.empty()) rep.geq = geq_summary(geq_from_csv(read_csv(f.geq)), load_geq_item_map(f.map));
  } catch (const std::filesystem::filesystem_error& e) {
    throw DataError(e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  if (f.json) {
    std::cout << to_json(rep).dump(2) << "\n";
  } else {
    std::cout << render_table(rep);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// protocol-dump

std::string flags_text(std::uint8_t flags) {
  std::string s;
  auto add = [&](std::uint8_t bit, const char* name) {
    if (flags & bit) s += (s.empty() ? "" : "|") + std::string(name);
  };
  add(wire::kFlagNotSeated, "not_seated");
  add(wire::kFlagMisaligned, "misaligned");
  add(wire::kFlagOverRotated, "over_rotated");
  add(wire::kFlagDropout, "dropout");
  return s.empty() ? "-" : s;
}

nlohmann::ordered_json pose_json(const PoseFrame& f) {
  nlohmann::ordered_json j = {{"kind", "pose"}, {"seq", f.seq}, {"timestamp_us", f.timestamp_us}};
  try {
    j["rotation_deg"] = torso_rotation_deg(f);
  } catch (const DegenerateVector&) {
    j["rotation_deg"] = nullptr;
  }
  j["trackable"] = frame_is_trackable(f);
  auto& lms = j["tracked"];
  for (auto idx : skeleton::kTracked) {
    const auto& lm = f.landmarks[idx];
    lms[std::to_string(idx)] = {lm.x, lm.y, lm.z, lm.visibility};
  }
  return j;
}

nlohmann::ordered_json feedback_json(const FeedbackPacket& p) {
  const auto code = static_cast<PromptCode>(p.prompt_code);
  return {{"kind", "feedback"},
          {"seq", p.seq},
          {"timestamp_us", p.timestamp_us},
          {"phase", std::string(to_string(p.phase))},
          {"angle_deg", p.angle_deg},
          {"hold_progress", p.hold_progress},
          {"total_score", p.total_score},
          {"current_streak", p.current_streak},
          {"rep_count", p.rep_count},
          {"posture_flags", flags_text(p.posture_flags)},
          {"prompt", std::string(prompt_key(code))},
          {"prompt_text", p.prompt_code <= kMaxPromptCode ? default_prompt_texts().text(code) : ""},
          {"audio_cue", std::string(to_string(static_cast<AudioCue>(p.audio_cue)))}};
}

std::string line_for(const nlohmann::ordered_json& j) {
  std::ostringstream out;
  out << j.at("kind").get<std::string>();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "kind" || it.key() == "tracked") continue;
    out << " " << it.key() << "=";
    if (it->is_string()) {
      out << it->get<std::string>();
    } else {
      out << it->dump();
    }
  }
  return out.str();
}

// Decodes one packet of either kind. Returns the number of bytes consumed.
std::size_t dump_packet(ByteView b, bool json, std::ostream& out, std::uint64_t offset) {
  const auto kind = peek_kind(b);
  std::size_t size = 0;
  if (kind == wire::kKindPose) size = wire::kPosePacketSize;
  if (kind == wire::kKindFeedback) size = wire::kFeedbackPacketSize;
  if (size == 0 || b.size() < size) {
    ProtocolError err = ProtocolError::BadLength;
    if (!kind) {
      err = b.size() < 6 ? ProtocolError::BadLength : ProtocolError::BadMagic;
    } else if (b.size() >= 6 && b[4] != wire::kVersion) {
      err = ProtocolError::BadVersion;
    } else if (size == 0) {
      err = ProtocolError::BadKind;
    }
    throw DataError("malformed packet at byte " + std::to_string(offset) + ": " +
                    std::string(to_string(err)));
  }
  const auto packet = b.subspan(0, size);
  nlohmann::ordered_json j;
  if (size == wire::kPosePacketSize) {
    auto d = decode_pose(packet);
    if (!d) throw DataError("malformed pose packet at byte " + std::to_string(offset) + ": " +
                            std::string(to_string(d.error())));
    j = pose_json(d.value());
  } else {
    auto d = decode_feedback(packet);
    if (!d) throw DataError("malformed feedback packet at byte " + std::to_string(offset) + ": " +
                            std::string(to_string(d.error())));
    j = feedback_json(d.value());
  }
  out << (json ? j.dump() : line_for(j)) << "\n";
  return size;
}

int cmd_protocol_dump(const std::string& file, bool json) {
  const Bytes bytes = read_file_bytes(file);
  const ByteView all(bytes);
  if (bytes.size() >= 8 && std::equal(kRecordingMagic, kRecordingMagic + 8, bytes.begin())) {
    Recording rec;
    try {
      rec = parse_recording(all);
    } catch (const RecordingError& e) {
      throw DataError(e.what());
    }
    std::cout << (json ? "" : "recording ") << rec.header.dump() << "\n";
    for (const auto& p : rec.packets) dump_packet(p.bytes, json, std::cout, 0);
    return kExitOk;
  }
  if (bytes.size() >= 4 && std::equal(wire::kMagic.begin(), wire::kMagic.end(), bytes.begin())) {
    std::size_t pos = 0;
    while (pos < bytes.size()) pos += dump_packet(all.subspan(pos), json, std::cout, pos);
    return kExitOk;
  }
  // Otherwise treat the file as a capture of the length-prefixed bridge stream.
  FrameReader reader;
  reader.feed(all);
  std::size_t frames = 0;
  try {
    while (auto msg = reader.next()) {
      ++frames;
      if (!msg->empty() && (*msg)[0] == '{') {
        std::cout << (json ? "" : "json ") << as_text(*msg) << "\n";
      } else {
        dump_packet(*msg, json, std::cout, 0);
      }
    }
  } catch (const std::length_error& e) {
    throw DataError(e.what());
  }
  if (frames == 0 || reader.buffered() != 0) {
    throw DataError(file + ": not a packet file, recording or bridge capture");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// control

int cmd_control(const std::string& command, const std::string& host, std::uint16_t port,
                int timeout_ms) {
  auto stream = net::TcpStream::connect(host, port);
  stream.set_receive_timeout_ms(timeout_ms);
  FrameReader reader;
  auto next_json = [&](const std::string& type) -> nlohmann::json {
    while (auto msg = net::read_frame(stream, reader)) {
      if (msg->empty() || (*msg)[0] != '{') continue;  // feedback frames
      auto j = nlohmann::json::parse(as_text(*msg));
      if (j.value("type", "") == type) return j;
    }
    throw DataError("no " + type + " from engine at " + host + ":" + std::to_string(port));
  };
  next_json("hello");
  stream.send_all(frame_message(nlohmann::json{{"type", "control"}, {"command", command}}.dump()));
  const auto ack = next_json("ack");
  std::cout << ack.dump(2) << "\n";
  return ack.value("ok", false) ? kExitOk : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seated torso rotation exercise engine"};
  app.require_subcommand(1);

  EngineFlags serve_flags;
  auto* serve = app.add_subcommand("serve", "run the engine service");
  add_engine_flags(serve, serve_flags);

  ReplayFlags replay_flags;
  auto* replay = app.add_subcommand("replay", "replay a .tshfrec recording");
  replay->add_option("file", replay_flags.file, "recording")->required()->check(CLI::ExistingFile);
  replay->add_option("--speed", replay_flags.speed, "1, 4, ... or inf (default inf)");
  replay->add_option("--to", replay_flags.to, "send packets to host:port instead of processing locally");
  replay->add_option("--out", replay_flags.out, "write the session log here instead of stdout");
  replay->add_option("--feedback-out", replay_flags.feedback_out, "write feedback packets here");
  replay->add_option("--start-time", replay_flags.start_time, "session start (ISO 8601 UTC)");
  add_engine_flags(replay, replay_flags.engine);

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "generate a synthetic recording");
  synth->add_option("spec", synth_flags.spec, "trajectory spec JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_flags.out, "output .tshfrec")->required();
  synth->add_option("--impair", synth_flags.impair, "impairment spec JSON")->check(CLI::ExistingFile);
  synth->add_option("--start-time", synth_flags.start_time, "session start stored in the header");

  AnalyzeFlags analyze_flags;
  auto* analyze = app.add_subcommand("analyze", "summarize a directory of session logs");
  analyze->add_option("dir", analyze_flags.dir, "sessions directory")->required()->check(CLI::ExistingDirectory);
  analyze->add_option("--sus", analyze_flags.sus, "SUS responses CSV")->check(CLI::ExistingFile);
  auto* geq_opt = analyze->add_option("--geq", analyze_flags.geq, "GEQ responses CSV")->check(CLI::ExistingFile);
  auto* map_opt = analyze->add_option("--map", analyze_flags.map, "GEQ item to dimension map")->check(CLI::ExistingFile);
  geq_opt->needs(map_opt);
  map_opt->needs(geq_opt);
  analyze->add_flag("--json", analyze_flags.json, "print JSON instead of a table");

  std::string dump_file;
  bool dump_json = false;
  auto* dump = app.add_subcommand("protocol-dump", "decode packets, recordings or bridge captures");
  dump->add_option("file", dump_file, "packet file")->required()->check(CLI::ExistingFile);
  dump->add_flag("--json", dump_json, "one JSON object per line");

  std::string control_cmd;
  std::string control_host = "127.0.0.1";
  std::uint16_t control_port = wire::kDefaultBridgePort;
  int control_timeout = 2000;
  auto* control = app.add_subcommand("control", "send start, stop or stats to a running engine");
  control->add_option("command", control_cmd)->required()->check(CLI::IsMember({"start", "stop", "stats"}));
  control->add_option("--host", control_host);
  control->add_option("--port", control_port);
  control->add_option("--timeout-ms", control_timeout);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*serve) return cmd_serve(serve_flags);
    if (*replay) return cmd_replay(replay_flags);
    if (*synth) return cmd_synth(synth_flags);
    if (*analyze) return cmd_analyze(analyze_flags);
    if (*dump) return cmd_protocol_dump(dump_file, dump_json);
    if (*control) return cmd_control(control_cmd, control_host, control_port, control_timeout);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "seatrot: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    // Bad flag values that only surface when the config is assembled.
    std::cerr << "seatrot: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "seatrot: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
