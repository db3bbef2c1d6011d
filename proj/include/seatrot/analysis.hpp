#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seatrot/session_log.hpp"

namespace seatrot {

struct SessionRow {
  std::string file;
  std::string start_time;
  std::size_t reps = 0;
  std::size_t correct = 0;
  std::size_t excellent = 0;
  std::optional<double> accuracy_pct;
  int total_score = 0;
  int best_streak = 0;
  double duration_s = 0.0;
};

struct AnalysisReport {
  std::vector<SessionRow> sessions;
  std::optional<Descriptives> accuracy;  // over sessions that have reps
  std::optional<Descriptives> score;
  std::size_t total_reps = 0;
  std::optional<Descriptives> sus;
  std::optional<GeqSummary> geq;
};

inline SessionRow summarize_session(const std::string& file, const SessionLog& log) {
  SessionRow row;
  row.file = file;
  row.start_time = format_utc(log.start_time);
  row.reps = log.reps.size();
  for (const auto& r : log.reps) {
    row.correct += r.correct;
    row.excellent += r.excellent;
  }
  row.accuracy_pct = session_accuracy(log);
  row.total_score = log.total_score;
  row.best_streak = log.streaks;
  row.duration_s = static_cast<double>(log.end_time - log.start_time) / 1000.0;
  return row;
}

inline AnalysisReport analyze_sessions(
    const std::vector<std::pair<std::filesystem::path, SessionLog>>& logs) {
  AnalysisReport rep;
  std::vector<double> acc;
  std::vector<double> scores;
  for (const auto& [path, log] : logs) {
    auto row = summarize_session(path.filename().string(), log);
    if (row.accuracy_pct) acc.push_back(*row.accuracy_pct);
    scores.push_back(row.total_score);
    rep.total_reps += row.reps;
    rep.sessions.push_back(std::move(row));
  }
  if (!acc.empty()) rep.accuracy = describe(acc);
  if (!scores.empty()) rep.score = describe(scores);
  return rep;
}

inline void add_sus(AnalysisReport& rep, const std::vector<SusResponse>& responses) {
  std::vector<double> scores;
  for (const auto& r : responses) scores.push_back(sus_score(r));
  rep.sus = describe(scores);
}

namespace detail {

inline nlohmann::ordered_json descriptives_json(const Descriptives& d) {
  return {{"n", d.n}, {"mean", d.mean}, {"sd", d.sd}, {"min", d.min}, {"max", d.max}};
}

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string pad(std::string s, std::size_t w, bool right = false) {
  if (s.size() >= w) return s;
  return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
}

inline std::string descriptives_line(const std::string& label, const Descriptives& d) {
  return pad(label, 18) + " n=" + std::to_string(d.n) + "  mean=" + fmt("%.3f", d.mean) +
         "  sd=" + fmt("%.3f", d.sd) + "  min=" + fmt("%.2f", d.min) +
         "  max=" + fmt("%.2f", d.max) + "\n";
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const AnalysisReport& rep) {
  nlohmann::ordered_json j;
  j["sessions"] = nlohmann::ordered_json::array();
  for (const auto& s : rep.sessions) {
    j["sessions"].push_back({{"file", s.file},
                             {"start_time", s.start_time},
                             {"duration_s", s.duration_s},
                             {"reps", s.reps},
                             {"correct", s.correct},
                             {"excellent", s.excellent},
                             {"accuracy_pct", s.accuracy_pct ? nlohmann::ordered_json(*s.accuracy_pct)
                                                             : nlohmann::ordered_json(nullptr)},
                             {"total_score", s.total_score},
                             {"best_streak", s.best_streak}});
  }
  j["aggregate"] = {{"sessions", rep.sessions.size()}, {"total_reps", rep.total_reps}};
  if (rep.accuracy) j["aggregate"]["accuracy_pct"] = detail::descriptives_json(*rep.accuracy);
  if (rep.score) j["aggregate"]["total_score"] = detail::descriptives_json(*rep.score);
  if (rep.sus) j["sus"] = detail::descriptives_json(*rep.sus);
  if (rep.geq) {
    auto& g = j["geq"];
    for (const auto& [item, d] : rep.geq->items) g["items"][item] = detail::descriptives_json(d);
    for (const auto& [dim, d] : rep.geq->dimensions) {
      g["dimensions"][std::string(to_string(dim))] = detail::descriptives_json(d);
    }
    g["overall"] = detail::descriptives_json(rep.geq->overall);
  }
  return j;
}

inline std::string render_table(const AnalysisReport& rep) {
  using detail::pad;
  std::ostringstream out;
  out << pad("session", 34) << pad("reps", 6, true) << pad("correct", 9, true)
      << pad("excel.", 8, true) << pad("accuracy", 10, true) << pad("score", 8, true)
      << pad("streak", 8, true) << "\n";
  for (const auto& s : rep.sessions) {
    out << pad(s.file, 34) << pad(std::to_string(s.reps), 6, true)
        << pad(std::to_string(s.correct), 9, true) << pad(std::to_string(s.excellent), 8, true)
        << pad(s.accuracy_pct ? detail::fmt("%.1f%%", *s.accuracy_pct) : "n/a", 10, true)
        << pad(std::to_string(s.total_score), 8, true)
        << pad(std::to_string(s.best_streak), 8, true) << "\n";
  }
  out << "\n" << rep.sessions.size() << " session(s), " << rep.total_reps << " rep(s)\n";
  if (rep.accuracy) out << detail::descriptives_line("accuracy %", *rep.accuracy);
  if (rep.score) out << detail::descriptives_line("total score", *rep.score);
  if (rep.sus) out << "\nSUS\n" << detail::descriptives_line("score", *rep.sus);
  if (rep.geq) {
    out << "\nGEQ items\n";
    for (const auto& [item, d] : rep.geq->items) out << detail::descriptives_line(item, d);
    out << "GEQ dimensions\n";
    for (const auto& [dim, d] : rep.geq->dimensions) {
      out << detail::descriptives_line(std::string(to_string(dim)), d);
    }
    out << detail::descriptives_line("overall", rep.geq->overall);
  }
  return out.str();
}

}  // namespace seatrot
