#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "seatrot/analysis.hpp"
#include "seatrot/session_log.hpp"

using namespace seatrot;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = SEATROT_FIXTURES_DIR;
const fs::path kConfig = SEATROT_CONFIG_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("seatrot_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// A valid log with values already at storage precision.
SessionLog random_log(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nreps(0, 20);
  std::uniform_int_distribution<int> tenth_deg(0, 900);
  std::uniform_int_distribution<int> hold_ms(0, 6000);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<std::int64_t> start(1'500'000'000'000, 1'900'000'000'000);
  std::uniform_int_distribution<int> dur_ms(0, 3'600'000);

  SessionLog log;
  log.start_time = start(rng);
  log.end_time = log.start_time + dur_ms(rng);
  int score = 0;
  int correct = 0;
  const int n = nreps(rng);
  for (int i = 0; i < n; ++i) {
    RepRecord r;
    r.rep_id = i + 1;
    r.angle = tenth_deg(rng) / 10.0;
    r.hold_duration = hold_ms(rng) / 1000.0;
    r.correct = r.hold_duration >= 2.0 && coin(rng);
    r.excellent = r.correct && coin(rng);
    r.side = coin(rng) ? Side::Right : Side::Left;
    score += (r.correct ? 10 : 0) + (r.excellent ? 5 : 0);
    correct += r.correct;
    log.reps.push_back(r);
  }
  const char* kinds[] = {"posture_fault", "over_rotation", "wrong_side", "paused", "achievement"};
  std::uniform_int_distribution<int> nev(0, 6);
  std::uniform_int_distribution<int> kind(0, 4);
  const int ne = nev(rng);
  for (int i = 0; i < ne; ++i) {
    std::uniform_int_distribution<std::int64_t> at(log.start_time, log.end_time);
    const std::string k = kinds[kind(rng)];
    if (k == "posture_fault") score -= 5;
    log.events.push_back({at(rng), k, "detail " + std::to_string(i)});
  }
  log.total_score = score;
  log.streaks = correct == 0 ? 0 : std::uniform_int_distribution<int>(0, correct)(rng);
  log.config_snapshot.hold_required_s = 2.0;
  return log;
}

}  // namespace

TEST(UtcTime, FormatsWholeAndFractionalSeconds) {
  EXPECT_EQ(format_utc(0), "1970-01-01T00:00:00Z");
  // 2025-01-15T10:30:45Z: 20103 days after the epoch.
  const UtcMillis t = (20103LL * 86400 + 10 * 3600 + 30 * 60 + 45) * 1000;
  EXPECT_EQ(format_utc(t), "2025-01-15T10:30:45Z");
  EXPECT_EQ(format_utc(t + 200), "2025-01-15T10:30:45.200Z");
  EXPECT_EQ(parse_utc("2025-01-15T10:30:45Z"), t);
  EXPECT_EQ(parse_utc("2025-01-15T10:30:45.2Z"), t + 200);
  EXPECT_EQ(format_utc(parse_utc("2024-02-29T23:59:59.999Z")), "2024-02-29T23:59:59.999Z");
}

TEST(UtcTime, RejectsMalformedStamps) {
  for (const char* bad : {"", "2025-01-15", "2025-01-15T10:30:45", "2025-13-01T00:00:00Z",
                          "2025-01-15 10:30:45Z", "yesterday"}) {
    EXPECT_THROW(parse_utc(bad), SessionLogError) << bad;
  }
}

TEST(SessionLogJson, RandomLogsRoundTrip) {
  std::mt19937_64 rng(20250115);
  for (int i = 0; i < 1000; ++i) {
    const auto log = random_log(rng);
    ASSERT_FALSE(check_session_log(log).has_value()) << *check_session_log(log);
    const auto text = serialize_session(log);
    const auto back = parse_session(text);
    ASSERT_EQ(back, log) << text;
    ASSERT_EQ(serialize_session(back), text);
  }
}

TEST(SessionLogJson, GoldenLogFieldNames) {
  const auto j = nlohmann::json::parse(slurp(kFixtures / "golden_log.json"));
  for (const char* key : {"exercise", "start_time", "reps", "total_score", "streaks"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  ASSERT_FALSE(j["reps"].empty());
  for (const char* key : {"rep_id", "angle", "hold_duration", "correct"}) {
    EXPECT_TRUE(j["reps"][0].contains(key)) << key;
  }
  EXPECT_EQ(j["exercise"], "seated");
  EXPECT_EQ(j["start_time"], "2025-01-15T10:30:45Z");
  EXPECT_EQ(j["reps"][0]["rep_id"], 1);
  EXPECT_EQ(j["reps"][0]["angle"], 42.8);
  EXPECT_EQ(j["reps"][0]["hold_duration"], 2.5);
  EXPECT_EQ(j["reps"][0]["correct"], true);
  EXPECT_EQ(j["total_score"], 50);
  EXPECT_EQ(j["streaks"], 3);
}

TEST(SessionLogJson, GoldenLogReserializesByteForByte) {
  const auto text = slurp(kFixtures / "golden_log.json");
  EXPECT_EQ(serialize_session(parse_session(text)), text);
}

TEST(SessionLogJson, ExpectedReplayLogIsValid) {
  const auto log = read_session(kFixtures / "perfect-5-reps.expected.json");
  EXPECT_EQ(log.reps.size(), 5u);
  EXPECT_EQ(log.total_score, 75);
  EXPECT_EQ(log.streaks, 5);
}

TEST(SessionLogJson, InvariantViolationsAreReported) {
  std::mt19937_64 rng(3);
  SessionLog base;
  do base = random_log(rng);
  while (base.reps.size() < 2);

  auto bad = base;
  bad.reps[1].rep_id = 7;
  EXPECT_TRUE(check_session_log(bad).has_value());

  bad = base;
  bad.reps[0].correct = false;
  bad.reps[0].excellent = true;
  EXPECT_TRUE(check_session_log(bad).has_value());

  bad = base;
  bad.total_score += 1;
  EXPECT_TRUE(check_session_log(bad).has_value());

  bad = base;
  bad.end_time = bad.start_time - 1;
  EXPECT_TRUE(check_session_log(bad).has_value());

  bad = base;
  bad.events.push_back({base.end_time + 1, "paused", ""});
  EXPECT_TRUE(check_session_log(bad).has_value());

  bad = base;
  bad.reps[0].correct = true;
  bad.reps[0].hold_duration = 1.0;
  EXPECT_TRUE(check_session_log(bad).has_value());

  EXPECT_THROW(write_session(bad, temp_dir("invalid") / "x.json"), SessionLogError);
}

TEST(SessionLogJson, MissingFieldsAndGarbageThrow) {
  EXPECT_THROW(parse_session("{"), SessionLogError);
  EXPECT_THROW(parse_session("[]"), SessionLogError);
  EXPECT_THROW(parse_session(R"({"exercise":"seated","start_time":"2025-01-15T10:30:45Z"})"),
               SessionLogError);
  EXPECT_THROW(parse_session(R"({"exercise":"seated","start_time":"nope","reps":[],)"
                             R"("total_score":0,"streaks":0})"),
               SessionLogError);
  EXPECT_NO_THROW(parse_session(R"({"exercise":"seated","start_time":"2025-01-15T10:30:45Z",)"
                                R"("reps":[],"total_score":0,"streaks":0})"));
}

TEST(SessionLogFiles, CorruptFileNamesThePath) {
  const auto path = kFixtures / "corrupt_sessions" / "seated-2025-01-18T08-00-00Z.json";
  try {
    read_session(path);
    FAIL() << "expected SessionLogError";
  } catch (const SessionLogError& e) {
    EXPECT_NE(std::string(e.what()).find(path.string()), std::string::npos);
  }
  EXPECT_THROW(load_session_dir(kFixtures / "corrupt_sessions"), SessionLogError);
}

TEST(SessionLogFiles, WriteReadAndFileName) {
  SessionLog log;
  log.start_time = parse_utc("2025-03-02T07:05:09.120Z");
  log.end_time = log.start_time + 60'000;
  EXPECT_EQ(session_filename(log), "seated-2025-03-02T07-05-09.120Z.json");
  const auto dir = temp_dir("write");
  const auto path = dir / session_filename(log);
  write_session(log, path);
  EXPECT_FALSE(fs::exists(path.string() + ".tmp"));
  EXPECT_EQ(read_session(path), log);
  fs::remove_all(dir);
}

TEST(SessionLogFiles, LoadsDirectoryInNameOrder) {
  const auto logs = load_session_dir(kFixtures / "sessions");
  ASSERT_EQ(logs.size(), 3u);
  EXPECT_TRUE(std::is_sorted(logs.begin(), logs.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; }));
  for (const auto& [path, log] : logs) EXPECT_EQ(path.filename().string(), session_filename(log));
}

TEST(Descriptives, MatchesHandComputation) {
  const auto d = describe({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
  EXPECT_EQ(d.n, 8u);
  EXPECT_DOUBLE_EQ(d.mean, 5.0);
  EXPECT_NEAR(d.sd, std::sqrt(32.0 / 7.0), 1e-12);
  EXPECT_EQ(d.min, 2.0);
  EXPECT_EQ(d.max, 9.0);
  EXPECT_EQ(describe({3.0}).sd, 0.0);
  EXPECT_THROW(describe({}), std::invalid_argument);
}

TEST(Sus, KnownResponses) {
  SusResponse all3;
  all3.items.fill(3);
  EXPECT_EQ(sus_score(all3), 50.0);
  SusResponse best{{5, 1, 5, 1, 5, 1, 5, 1, 5, 1}};
  EXPECT_EQ(sus_score(best), 100.0);
  SusResponse worst{{1, 5, 1, 5, 1, 5, 1, 5, 1, 5}};
  EXPECT_EQ(sus_score(worst), 0.0);
  SusResponse out_of_range = all3;
  out_of_range.items[4] = 6;
  EXPECT_THROW(sus_score(out_of_range), std::invalid_argument);
}

TEST(Sus, CohortFixtureStatistics) {
  const auto responses = sus_from_csv(read_csv((kFixtures / "sus_cohort.csv").string()));
  ASSERT_EQ(responses.size(), 20u);

  // Oracle: score each row by the questionnaire's published rule.
  std::vector<double> scores;
  for (const auto& r : responses) {
    int odd = 0;
    int even = 0;
    for (int i = 0; i < 10; i += 2) odd += r.items[i];
    for (int i = 1; i < 10; i += 2) even += r.items[i];
    scores.push_back(((odd - 5) + (25 - even)) * 2.5);
  }
  double sum = 0.0;
  for (double s : scores) sum += s;
  const double mean = sum / 20.0;
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);

  const auto d = describe([&] {
    std::vector<double> v;
    for (const auto& r : responses) v.push_back(sus_score(r));
    return v;
  }());
  EXPECT_DOUBLE_EQ(d.mean, mean);
  EXPECT_NEAR(d.sd, std::sqrt(ss / 19.0), 1e-12);
  EXPECT_DOUBLE_EQ(d.mean, 47.375);
  EXPECT_NEAR(d.sd, 7.1, 0.1);
  EXPECT_EQ(d.min, 27.5);
  EXPECT_EQ(d.max, 60.0);
}

TEST(Sus, CsvErrors) {
  std::istringstream missing("participant,Q1,Q2\nP1,3,3\n");
  EXPECT_THROW(sus_from_csv(parse_csv(missing)), std::runtime_error);
  std::istringstream ragged("Q1,Q2\n1\n");
  EXPECT_THROW(parse_csv(ragged), std::runtime_error);
  std::istringstream text("Q1,Q2,Q3,Q4,Q5,Q6,Q7,Q8,Q9,Q10\n3,3,3,x,3,3,3,3,3,3\n");
  EXPECT_THROW(sus_from_csv(parse_csv(text)), std::runtime_error);
}

TEST(Geq, CohortItemMeans) {
  const auto responses = geq_from_csv(read_csv((kFixtures / "geq_cohort.csv").string()));
  const auto map = load_geq_item_map((kConfig / "geq_items.cfg").string());
  ASSERT_EQ(map.size(), 14u);
  const auto s = geq_summary(responses, map);

  // Oracle: column sums straight from the file.
  std::ifstream in(kFixtures / "geq_cohort.csv");
  std::string line;
  std::getline(in, line);
  std::vector<double> sums(15, 0.0);
  int n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    for (int q = 1; q <= 14; ++q) {
      std::getline(ss, cell, ',');
      sums[q] += std::stoi(cell);
    }
    ++n;
  }
  for (int q = 1; q <= 14; ++q) {
    EXPECT_DOUBLE_EQ(s.items.at("Q" + std::to_string(q)).mean, sums[q] / n) << q;
  }
  EXPECT_DOUBLE_EQ(s.items.at("Q1").mean, 4.7);
  EXPECT_DOUBLE_EQ(s.items.at("Q9").mean, 4.5);
  EXPECT_DOUBLE_EQ(s.items.at("Q13").mean, 4.95);
  EXPECT_EQ(s.dimensions.size(), 6u);
}

TEST(Geq, DimensionIsPerParticipantMean) {
  GeqItemMap map{{"Q1", GeqDimension::Flow}, {"Q2", GeqDimension::Flow},
                 {"Q3", GeqDimension::Tension}};
  std::vector<GeqResponse> rs(2);
  rs[0].items = {{"Q1", 5}, {"Q2", 3}, {"Q3", 1}};
  rs[1].items = {{"Q1", 2}, {"Q2", 2}, {"Q3", 3}};
  const auto s = geq_summary(rs, map);
  EXPECT_DOUBLE_EQ(s.dimensions.at(GeqDimension::Flow).mean, (4.0 + 2.0) / 2);
  EXPECT_DOUBLE_EQ(s.dimensions.at(GeqDimension::Tension).mean, 2.0);
  EXPECT_DOUBLE_EQ(s.overall.mean, (3.0 + 7.0 / 3.0) / 2);

  rs[1].items["Q9"] = 3;
  EXPECT_THROW(geq_summary(rs, map), std::invalid_argument);
}

TEST(Geq, ItemMapErrors) {
  std::istringstream unknown("Q1 = Joy\n");
  EXPECT_THROW(parse_geq_item_map(unknown, "t"), std::runtime_error);
  std::istringstream dup("Q1 = Flow\nQ1 = Tension\n");
  EXPECT_THROW(parse_geq_item_map(dup, "t"), std::runtime_error);
  std::istringstream ok("# comment\n\nQ2 = Flow\nQ10 = Competence\n");
  const auto map = parse_geq_item_map(ok, "t");
  EXPECT_EQ(map.begin()->first, "Q2");
}

TEST(Analysis, SessionDirectoryReport) {
  auto rep = analyze_sessions(load_session_dir(kFixtures / "sessions"));
  ASSERT_EQ(rep.sessions.size(), 3u);
  EXPECT_EQ(rep.total_reps, 5u + 0u + 8u);
  // The over-rotation session has no reps and is left out of accuracy.
  ASSERT_TRUE(rep.accuracy.has_value());
  EXPECT_EQ(rep.accuracy->n, 2u);
  EXPECT_FALSE(rep.sessions[1].accuracy_pct.has_value());
  EXPECT_DOUBLE_EQ(rep.sessions[0].accuracy_pct.value(), 100.0);

  add_sus(rep, sus_from_csv(read_csv((kFixtures / "sus_cohort.csv").string())));
  const auto j = to_json(rep);
  EXPECT_EQ(j["aggregate"]["sessions"], 3);
  EXPECT_DOUBLE_EQ(j["sus"]["mean"].get<double>(), 47.375);
  EXPECT_TRUE(j["sessions"][1]["accuracy_pct"].is_null());
  const auto table = render_table(rep);
  EXPECT_NE(table.find("n/a"), std::string::npos);
  EXPECT_NE(table.find("SUS"), std::string::npos);
}
