#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "seatrot/exercise_fsm.hpp"
#include "seatrot/scoring.hpp"

namespace seatrot {

class SessionLogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// UTC timestamps

/// Milliseconds since the Unix epoch, UTC.
using UtcMillis = std::int64_t;

namespace detail {

// Howard Hinnant's civil-calendar conversions.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t y;
  unsigned m;
  unsigned d;
};

constexpr Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a / b - ((a % b != 0) && ((a < 0) != (b < 0)));
}

}  // namespace detail

/// ISO-8601 with a Z suffix; milliseconds are printed only when non-zero.
inline std::string format_utc(UtcMillis ms) {
  const std::int64_t days = detail::floor_div(ms, 86'400'000);
  const std::int64_t rem = ms - days * 86'400'000;
  const auto c = detail::civil_from_days(days);
  const int h = static_cast<int>(rem / 3'600'000);
  const int mi = static_cast<int>(rem / 60'000 % 60);
  const int s = static_cast<int>(rem / 1000 % 60);
  const int frac = static_cast<int>(rem % 1000);
  char buf[40];
  if (frac == 0) {
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02dZ",
                  static_cast<long long>(c.y), c.m, c.d, h, mi, s);
  } else {
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<long long>(c.y), c.m, c.d, h, mi, s, frac);
  }
  return buf;
}

inline UtcMillis parse_utc(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, n = 0;
  const std::string str(text);
  if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s,
                  &n) != 6 ||
      n != 19) {
    throw SessionLogError("bad timestamp '" + str + "'");
  }
  int frac = 0;
  std::size_t pos = 19;
  if (pos < str.size() && str[pos] == '.') {
    int digits = 0;
    ++pos;
    while (pos < str.size() && std::isdigit(static_cast<unsigned char>(str[pos]))) {
      if (digits < 3) frac = frac * 10 + (str[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) throw SessionLogError("bad timestamp '" + str + "'");
    for (int i = digits; i < 3; ++i) frac *= 10;
  }
  if (pos + 1 != str.size() || str[pos] != 'Z' || mo < 1 || mo > 12 || d < 1 ||
      d > 31 || h > 23 || mi > 59 || s > 60) {
    throw SessionLogError("bad timestamp '" + str + "' (expected UTC with Z suffix)");
  }
  const auto days = detail::days_from_civil(y, static_cast<unsigned>(mo),
                                            static_cast<unsigned>(d));
  return ((days * 24 + h) * 60 + mi) * 60'000 + s * 1000 + frac;
}

// ---------------------------------------------------------------------------
// Session log

namespace event_kind {
inline constexpr std::string_view kPostureFault = "posture_fault";
inline constexpr std::string_view kOverRotation = "over_rotation";
inline constexpr std::string_view kPerfectStreak = "perfect_streak";
inline constexpr std::string_view kAchievement = "achievement";
inline constexpr std::string_view kWrongSide = "wrong_side";
inline constexpr std::string_view kPaused = "paused";
}  // namespace event_kind

struct SessionEvent {
  UtcMillis timestamp = 0;
  std::string kind;
  std::string detail;

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

struct SessionLog {
  std::string exercise = "seated";
  UtcMillis start_time = 0;
  UtcMillis end_time = 0;
  std::vector<RepRecord> reps;
  int total_score = 0;
  int streaks = 0;  // best streak of the session
  std::vector<SessionEvent> events;
  ExerciseConfig config_snapshot;

  friend bool operator==(const SessionLog&, const SessionLog&) = default;
};

// Rounds to 1/scale; dividing keeps e.g. 42.8 exactly representable as 42.8.
inline double round_to(double v, double scale) { return std::round(v * scale) / scale; }

inline int count_events(const SessionLog& log, std::string_view kind) {
  return static_cast<int>(std::count_if(log.events.begin(), log.events.end(),
                                        [&](const auto& e) { return e.kind == kind; }));
}

/// The score implied by the reps and fault events of a log.
inline int expected_total_score(const SessionLog& log) {
  int score = 0;
  for (const auto& r : log.reps) {
    if (r.correct) score += kPointsCorrectRep;
    if (r.excellent) score += kPointsExcellence;
  }
  return score + kPointsPostureFault * count_events(log, event_kind::kPostureFault);
}

/// Returns the first violated invariant, if any.
inline std::optional<std::string> check_session_log(const SessionLog& log) {
  if (log.end_time < log.start_time) return "end_time precedes start_time";
  int correct = 0;
  for (std::size_t i = 0; i < log.reps.size(); ++i) {
    const auto& r = log.reps[i];
    if (r.rep_id != static_cast<int>(i) + 1) {
      return "rep_id values must be 1..N consecutive (rep " + std::to_string(i + 1) + ")";
    }
    if (r.excellent && !r.correct) {
      return "rep " + std::to_string(r.rep_id) + " is excellent but not correct";
    }
    if (r.correct && r.hold_duration + 1e-9 < log.config_snapshot.hold_required_s) {
      return "rep " + std::to_string(r.rep_id) + " is correct but held too briefly";
    }
    if (!(r.angle >= 0.0) || !(r.hold_duration >= 0.0)) {
      return "rep " + std::to_string(r.rep_id) + " has a negative angle or duration";
    }
    correct += r.correct;
  }
  if (log.streaks < 0 || log.streaks > correct) return "streaks exceeds correct reps";
  if (log.total_score != expected_total_score(log)) {
    return "total_score " + std::to_string(log.total_score) +
           " does not match reps and faults (expected " +
           std::to_string(expected_total_score(log)) + ")";
  }
  for (const auto& e : log.events) {
    if (e.timestamp < log.start_time || e.timestamp > log.end_time) {
      return "event '" + e.kind + "' lies outside the session";
    }
  }
  return std::nullopt;
}

using ordered_json = nlohmann::ordered_json;

inline ordered_json to_json(const ExerciseConfig& c) {
  return ordered_json{{"safe_min_deg", c.safe_min_deg},
                      {"safe_max_deg", c.safe_max_deg},
                      {"excel_min_deg", c.excel_min_deg},
                      {"excel_max_deg", c.excel_max_deg},
                      {"hold_required_s", c.hold_required_s},
                      {"neutral_band_deg", c.neutral_band_deg},
                      {"alternate_sides", c.alternate_sides},
                      {"fault_debounce_s", c.fault_debounce_s}};
}

inline ExerciseConfig exercise_config_from_json(const nlohmann::json& j) {
  ExerciseConfig c;
  c.safe_min_deg = j.value("safe_min_deg", c.safe_min_deg);
  c.safe_max_deg = j.value("safe_max_deg", c.safe_max_deg);
  c.excel_min_deg = j.value("excel_min_deg", c.excel_min_deg);
  c.excel_max_deg = j.value("excel_max_deg", c.excel_max_deg);
  c.hold_required_s = j.value("hold_required_s", c.hold_required_s);
  c.neutral_band_deg = j.value("neutral_band_deg", c.neutral_band_deg);
  c.alternate_sides = j.value("alternate_sides", c.alternate_sides);
  c.fault_debounce_s = j.value("fault_debounce_s", c.fault_debounce_s);
  return c;
}

/// Angles are stored to 0.1 degree and durations to the millisecond.
inline ordered_json to_json(const SessionLog& log) {
  ordered_json reps = ordered_json::array();
  for (const auto& r : log.reps) {
    reps.push_back(ordered_json{{"rep_id", r.rep_id},
                                {"angle", round_to(r.angle, 10.0)},
                                {"hold_duration", round_to(r.hold_duration, 1000.0)},
                                {"correct", r.correct},
                                {"excellent", r.excellent},
                                {"side", to_string(r.side)}});
  }
  ordered_json events = ordered_json::array();
  for (const auto& e : log.events) {
    events.push_back(ordered_json{
        {"timestamp", format_utc(e.timestamp)}, {"kind", e.kind}, {"detail", e.detail}});
  }
  return ordered_json{{"exercise", log.exercise},
                      {"start_time", format_utc(log.start_time)},
                      {"end_time", format_utc(log.end_time)},
                      {"reps", std::move(reps)},
                      {"total_score", log.total_score},
                      {"streaks", log.streaks},
                      {"events", std::move(events)},
                      {"config_snapshot", to_json(log.config_snapshot)}};
}

inline std::string serialize_session(const SessionLog& log) {
  return to_json(log).dump(2) + "\n";
}

/// Parses and validates a session document. Structural or consistency
/// problems raise SessionLogError.
inline SessionLog session_from_json(const nlohmann::json& j) {
  try {
    SessionLog log;
    log.exercise = j.at("exercise").get<std::string>();
    log.start_time = parse_utc(j.at("start_time").get<std::string>());
    log.end_time = j.contains("end_time") ? parse_utc(j.at("end_time").get<std::string>())
                                          : log.start_time;
    for (const auto& r : j.at("reps")) {
      RepRecord rep;
      rep.rep_id = r.at("rep_id").get<int>();
      rep.angle = r.at("angle").get<double>();
      rep.hold_duration = r.at("hold_duration").get<double>();
      rep.correct = r.at("correct").get<bool>();
      rep.excellent = r.value("excellent", false);
      const auto side = r.value("side", std::string("right"));
      if (side != "right" && side != "left") throw SessionLogError("bad side '" + side + "'");
      rep.side = side == "right" ? Side::Right : Side::Left;
      log.reps.push_back(rep);
    }
    log.total_score = j.at("total_score").get<int>();
    log.streaks = j.at("streaks").get<int>();
    if (j.contains("events")) {
      for (const auto& e : j.at("events")) {
        log.events.push_back({parse_utc(e.at("timestamp").get<std::string>()),
                              e.at("kind").get<std::string>(),
                              e.value("detail", std::string())});
      }
    }
    if (j.contains("config_snapshot")) {
      log.config_snapshot = exercise_config_from_json(j.at("config_snapshot"));
    }
    if (auto problem = check_session_log(log)) throw SessionLogError(*problem);
    return log;
  } catch (const nlohmann::json::exception& e) {
    throw SessionLogError(e.what());
  }
}

inline SessionLog parse_session(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SessionLogError(e.what());
  }
  return session_from_json(j);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw SessionLogError("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw SessionLogError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw SessionLogError("cannot move " + tmp.string() + " to " + path.string() +
                                ": " + ec.message());
}

inline void write_session(const SessionLog& log, const std::filesystem::path& path) {
  if (auto problem = check_session_log(log)) {
    throw SessionLogError("refusing to write " + path.string() + ": " + *problem);
  }
  write_text_file(path, serialize_session(log));
}

inline SessionLog read_session(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SessionLogError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_session(ss.str());
  } catch (const SessionLogError& e) {
    throw SessionLogError("corrupt session log " + path.string() + ": " + e.what());
  }
}

inline std::string session_filename(const SessionLog& log) {
  auto stamp = format_utc(log.start_time);
  std::replace(stamp.begin(), stamp.end(), ':', '-');
  return log.exercise + "-" + stamp + ".json";
}

/// Loads every *.json session in `dir`, ordered by file name.
inline std::vector<std::pair<std::filesystem::path, SessionLog>> load_session_dir(
    const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::filesystem::path, SessionLog>> out;
  for (auto& f : files) out.emplace_back(f, read_session(f));
  return out;
}

/// Percentage of correct reps; nullopt stands for a session with no reps.
inline std::optional<double> session_accuracy(const SessionLog& log) {
  if (log.reps.empty()) return std::nullopt;
  const auto correct = std::count_if(log.reps.begin(), log.reps.end(),
                                     [](const RepRecord& r) { return r.correct; });
  return 100.0 * static_cast<double>(correct) / static_cast<double>(log.reps.size());
}

// ---------------------------------------------------------------------------
// Descriptive statistics

struct Descriptives {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample SD (n - 1); 0 for a single value
  double min = 0.0;
  double max = 0.0;
};

inline Descriptives describe(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("describe: empty sample");
  Descriptives d;
  d.n = xs.size();
  d.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(d.n);
  if (d.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - d.mean) * (x - d.mean);
    d.sd = std::sqrt(ss / static_cast<double>(d.n - 1));
  }
  auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  d.min = *lo;
  d.max = *hi;
  return d;
}

// ---------------------------------------------------------------------------
// Questionnaires

struct SusResponse {
  std::array<int, 10> items{};
};

/// Standard SUS: odd items contribute (score - 1), even items (5 - score);
/// the sum is scaled by 2.5 onto 0..100.
inline double sus_score(const SusResponse& r) {
  int sum = 0;
  for (std::size_t i = 0; i < r.items.size(); ++i) {
    const int v = r.items[i];
    if (v < 1 || v > 5) {
      throw std::invalid_argument("SUS item " + std::to_string(i + 1) +
                                  " out of range 1..5: " + std::to_string(v));
    }
    sum += (i % 2 == 0) ? v - 1 : 5 - v;  // index 0 is item 1 (odd)
  }
  return sum * 2.5;
}

enum class GeqDimension { Competence, Immersion, Flow, PositiveAffect, NegativeAffect, Tension };

inline constexpr GeqDimension kGeqDimensions[] = {
    GeqDimension::Competence,     GeqDimension::Immersion,
    GeqDimension::Flow,           GeqDimension::PositiveAffect,
    GeqDimension::NegativeAffect, GeqDimension::Tension};

inline std::string_view to_string(GeqDimension d) {
  switch (d) {
    case GeqDimension::Competence: return "Competence";
    case GeqDimension::Immersion: return "Immersion";
    case GeqDimension::Flow: return "Flow";
    case GeqDimension::PositiveAffect: return "PositiveAffect";
    case GeqDimension::NegativeAffect: return "NegativeAffect";
    case GeqDimension::Tension: return "Tension";
  }
  return "?";
}

inline std::optional<GeqDimension> geq_dimension_from_string(std::string_view s) {
  for (auto d : kGeqDimensions) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Orders "Q2" before "Q10".
struct NaturalLess {
  bool operator()(const std::string& a, const std::string& b) const {
    auto split = [](const std::string& s) {
      auto p = s.find_first_of("0123456789");
      if (p == std::string::npos) return std::pair<std::string, long>{s, -1};
      return std::pair<std::string, long>{s.substr(0, p), std::stol(s.substr(p))};
    };
    return split(a) < split(b) || (split(a) == split(b) && a < b);
  }
};

}  // namespace detail

/// Item id -> dimension, loaded from `Q1 = PositiveAffect` lines.
using GeqItemMap = std::map<std::string, GeqDimension, detail::NaturalLess>;

inline GeqItemMap parse_geq_item_map(std::istream& in, const std::string& origin) {
  GeqItemMap map;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected ITEM = Dimension");
    }
    auto item = detail::trim(t.substr(0, eq));
    auto dim = geq_dimension_from_string(detail::trim(t.substr(eq + 1)));
    if (!dim) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": unknown dimension");
    }
    if (!map.emplace(item, *dim).second) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": item '" + item +
                               "' mapped twice");
    }
  }
  return map;
}

inline GeqItemMap load_geq_item_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_geq_item_map(in, path);
}

struct GeqResponse {
  std::map<std::string, int, detail::NaturalLess> items;
};

struct GeqSummary {
  std::map<std::string, Descriptives, detail::NaturalLess> items;
  std::map<GeqDimension, Descriptives> dimensions;
  Descriptives overall;
};

/// Per-item and per-dimension descriptives. A participant's dimension score
/// is the mean of their items in that dimension.
inline GeqSummary geq_summary(const std::vector<GeqResponse>& responses,
                              const GeqItemMap& map) {
  if (responses.empty()) throw std::invalid_argument("geq_summary: no responses");
  std::map<std::string, std::vector<double>, detail::NaturalLess> per_item;
  std::map<GeqDimension, std::vector<double>> per_dim;
  std::vector<double> overall;
  for (const auto& r : responses) {
    std::map<GeqDimension, std::pair<double, int>> acc;
    double total = 0.0;
    for (const auto& [item, v] : r.items) {
      auto it = map.find(item);
      if (it == map.end()) throw std::invalid_argument("GEQ item '" + item + "' has no dimension");
      if (v < 1 || v > 5) {
        throw std::invalid_argument("GEQ item '" + item + "' out of range 1..5");
      }
      per_item[item].push_back(v);
      acc[it->second].first += v;
      acc[it->second].second += 1;
      total += v;
    }
    for (const auto& [dim, sum_n] : acc) per_dim[dim].push_back(sum_n.first / sum_n.second);
    if (!r.items.empty()) overall.push_back(total / static_cast<double>(r.items.size()));
  }
  GeqSummary s;
  for (const auto& [item, xs] : per_item) s.items[item] = describe(xs);
  for (const auto& [dim, xs] : per_dim) s.dimensions[dim] = describe(xs);
  if (!overall.empty()) s.overall = describe(overall);
  return s;
}

// ---------------------------------------------------------------------------
// Questionnaire CSV: a header row naming the items, one row per participant.
// An optional leading `participant` column is ignored.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(detail::trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) {
        throw std::runtime_error("CSV row " + std::to_string(t.rows.size() + 2) + " has " +
                                 std::to_string(cells.size()) + " cells, header has " +
                                 std::to_string(t.header.size()));
      }
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_csv(in);
}

namespace detail {

inline bool is_participant_column(const std::string& name) {
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return lower == "participant" || lower == "id";
}

inline int parse_item(const std::string& cell, std::size_t row, const std::string& col) {
  try {
    std::size_t used = 0;
    int v = std::stoi(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("row " + std::to_string(row + 2) + ", column " + col +
                           ": not an integer: '" + cell + "'");
}

}  // namespace detail

inline std::vector<SusResponse> sus_from_csv(const CsvTable& t) {
  std::array<std::optional<std::size_t>, 10> cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const auto& h = t.header[c];
    if (detail::is_participant_column(h)) continue;
    std::size_t idx = 0;
    if (h.size() >= 2 && (h[0] == 'Q' || h[0] == 'q')) {
      try {
        idx = std::stoul(h.substr(1));
      } catch (const std::exception&) {
        idx = 0;
      }
    }
    if (idx < 1 || idx > 10) throw std::runtime_error("SUS CSV: unexpected column '" + h + "'");
    cols[idx - 1] = c;
  }
  for (std::size_t i = 0; i < 10; ++i) {
    if (!cols[i]) throw std::runtime_error("SUS CSV: missing column Q" + std::to_string(i + 1));
  }
  std::vector<SusResponse> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    SusResponse resp;
    for (std::size_t i = 0; i < 10; ++i) {
      resp.items[i] = detail::parse_item(t.rows[r][*cols[i]], r, t.header[*cols[i]]);
    }
    out.push_back(resp);
  }
  return out;
}

inline std::vector<GeqResponse> geq_from_csv(const CsvTable& t) {
  std::vector<GeqResponse> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    GeqResponse resp;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (detail::is_participant_column(t.header[c])) continue;
      if (t.rows[r][c].empty()) continue;  // unanswered
      resp.items[t.header[c]] = detail::parse_item(t.rows[r][c], r, t.header[c]);
    }
    out.push_back(std::move(resp));
  }
  return out;
}

}  // namespace seatrot
