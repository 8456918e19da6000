#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "etrie/sim.hpp"
#include "fixtures.hpp"

using namespace etrie;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig fixture_config() {
  RunConfig c;
  c.trace_path = std::string(ETRIE_SCENARIO_DIR) + "/fig4_fixture.csv";
  c.threshold = ThresholdSpec::parse("10");
  c.active_timeout_s = 1;
  c.inactive_timeout_s = 30;
  c.max_depth = 3;
  c.warmup_windows = 3;
  return c;
}

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.duration_s = 12;
  s.rate_pps = 2000;
  s.sources = 500;
  s.heavies = {{*Prefix::parse("10.1.0.0/16"), 0.2}, {*Prefix::parse("192.168.7.9/32"), 0.1}};
  return s;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("etrie_sim_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST(ThresholdSpecTest, Parse) {
  EXPECT_TRUE(ThresholdSpec::parse("5%").percent);
  EXPECT_DOUBLE_EQ(ThresholdSpec::parse("5%").value, 5);
  EXPECT_FALSE(ThresholdSpec::parse("1000").percent);
  EXPECT_EQ(ThresholdSpec::parse("1000").to_string(), "1000");
  EXPECT_THROW(ThresholdSpec::parse("0"), ConfigError);
  EXPECT_THROW(ThresholdSpec::parse("150%"), ConfigError);
  EXPECT_THROW(ThresholdSpec::parse("abc"), ConfigError);
}

TEST(ByteSize, Suffixes) {
  EXPECT_EQ(parse_byte_size("8192"), 8192u);
  EXPECT_EQ(parse_byte_size("8KB"), 8192u);
  EXPECT_EQ(parse_byte_size("1MB"), 1u << 20);
  EXPECT_THROW(parse_byte_size("0"), ConfigError);
  EXPECT_THROW(parse_byte_size("lots"), ConfigError);
}

TEST(Run, FixtureMatchesOracleAfterWarmup) {
  const auto rep = run(fixture_config());
  ASSERT_NE(rep.at_relax(0), nullptr);
  EXPECT_GE(rep.at_relax(0)->windows, 7u);
  EXPECT_EQ(rep.at_relax(0)->recall, 1.0);
  EXPECT_EQ(rep.at_relax(0)->precision, 1.0);
  EXPECT_EQ(rep.truth_threshold, 10u);
}

TEST(Run, PercentThresholdConversion) {
  RunConfig c;
  c.synthetic = small_spec();
  c.threshold = ThresholdSpec::parse("5%");
  c.active_timeout_s = 2;
  c.inactive_timeout_s = 10;
  const auto rep = run(c, load_packets(c));
  EXPECT_DOUBLE_EQ(rep.base_rate, 2000);
  EXPECT_EQ(rep.truth_threshold, 200u);  // 0.05 * 2000/s * 2 s
  for (unsigned l = 0; l <= 32; ++l) EXPECT_EQ(rep.trie.threshold(l), 200u);
  c.nominal_rate = 4000;
  EXPECT_EQ(run(c, load_packets(c)).truth_threshold, 400u);
}

TEST(Run, InvalidConfigsRejectedUpFront) {
  auto c = fixture_config();
  c.active_timeout_s = 40;
  EXPECT_THROW(run(c), ConfigError);
  c = fixture_config();
  c.synthetic = small_spec();
  EXPECT_THROW(run(c), ConfigError);  // two sources
  c = fixture_config();
  c.mode = Mode::spread;
  c.threshold = ThresholdSpec::parse("5%");
  EXPECT_THROW(run(c), ConfigError);
  c = fixture_config();
  c.relax = {4};
  EXPECT_THROW(run(c), ConfigError);
  c = fixture_config();
  c.trace_path = "/nonexistent/trace.csv";
  EXPECT_THROW(run(c), std::exception);
}

TEST(Run, SameInputsSameBytes) {
  RunConfig c;
  c.synthetic = small_spec();
  c.seed = 11;
  c.active_timeout_s = 2;
  c.inactive_timeout_s = 10;
  c.memory_bytes = 8 * 1024;
  c.timeout_fn = TimeoutPolicy{8};
  const auto a = temp_dir("det_a"), b = temp_dir("det_b");
  c.report_dir = a.string();
  run(c);
  c.report_dir = b.string();
  run(c);
  for (const char* f : {"events.jsonl", "scores.csv", "series.csv", "summary.json"}) {
    const auto x = slurp(a / f);
    EXPECT_FALSE(x.empty()) << f;
    // summary echoes the report dir through events_out
    std::string y = slurp(b / f);
    if (std::string(f) == "summary.json") {
      std::string::size_type pos;
      while ((pos = y.find(b.string())) != std::string::npos) y.replace(pos, b.string().size(), a.string());
    }
    EXPECT_EQ(x, y) << f;
  }
}

TEST(Run, EventFileHoldsEverythingNotDropped) {
  RunConfig c;
  c.synthetic = small_spec();
  c.active_timeout_s = 1;
  c.inactive_timeout_s = 10;
  c.queue_capacity = 2;
  const auto d = temp_dir("events");
  std::filesystem::create_directories(d);
  c.events_out = (d / "ev.jsonl").string();
  const auto rep = run(c, load_packets(c));
  std::ifstream in(c.events_out);
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, rep.digests.size());
  EXPECT_GT(lines, 0u);
}

TEST(Run, SeriesTracksDepth) {
  RunConfig c;
  c.synthetic = small_spec();
  c.active_timeout_s = 1;
  c.inactive_timeout_s = 10;
  const auto rep = run(c, load_packets(c));
  ASSERT_FALSE(rep.series.empty());
  EXPECT_EQ(rep.series.front().ts, 0u);
  EXPECT_EQ(rep.series.back().ts, rep.trace_end);
  EXPECT_GE(rep.series.back().depth, 10u);
  const auto csv = series_csv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "ts_us,depth,nodes,bits_in_use,change_average");
}

TEST(Run, TargetDefaultsToDeepestPlantedHeavy) {
  RunConfig c;
  c.synthetic = small_spec();
  c.synthetic->duration_s = 40;
  c.active_timeout_s = 1;
  c.inactive_timeout_s = 10;
  const auto rep = run(c, load_packets(c));
  ASSERT_TRUE(rep.target.has_value());
  EXPECT_EQ(*rep.target, *Prefix::parse("192.168.7.9/32"));
  ASSERT_TRUE(rep.first_target_window.has_value());
  EXPECT_LE(*rep.first_target_window, 33u);
}

TEST(Sweep, MemoryAxisGivesOneRowPerValue) {
  RunConfig c;
  c.synthetic = small_spec();
  c.active_timeout_s = 1;
  c.inactive_timeout_s = 10;
  const auto rows = sweep(c, SweepAxis::memory, {"4KB", "8KB", "16KB", "32KB"}, 2);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].value, "4KB");
  const auto csv = sweep_csv(SweepAxis::memory, rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4 * 2);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "memory,relax,recall,precision,windows,first_target_window,final_nodes,bits_in_use,events");
  for (const auto& r : rows)
    for (const auto& pt : r.report.series) EXPECT_LE(pt.bits_in_use, *r.report.config.memory_bytes * 8) << r.value;
}

TEST(Sweep, TimeoutAxisReportsLearningWindow) {
  RunConfig c;
  c.synthetic = small_spec();
  c.active_timeout_s = 1;
  c.inactive_timeout_s = 30;
  c.synthetic->duration_s = 40;
  const auto rows = sweep(c, SweepAxis::timeout_fn, {"fixed", "f:16", "f:8", "f:1"}, 4);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) ASSERT_TRUE(r.report.first_target_window.has_value()) << r.value;
  EXPECT_LT(*rows[3].report.first_target_window, *rows[0].report.first_target_window);
}

TEST(Sweep, EmptyAxisIsAnError) {
  RunConfig c;
  c.synthetic = small_spec();
  EXPECT_THROW(sweep(c, SweepAxis::memory, {}, 1), ConfigError);
  EXPECT_THROW(sweep(c, SweepAxis::memory, {"zero"}, 1), ConfigError);
  EXPECT_THROW(parse_sweep_axis("depth"), ConfigError);
}

TEST(Sweep, MatchesIndependentRuns) {
  RunConfig c;
  c.synthetic = small_spec();
  c.active_timeout_s = 1;
  c.inactive_timeout_s = 10;
  const auto rows = sweep(c, SweepAxis::threshold, {"2%", "10%"}, 2);
  auto single = c;
  single.threshold = ThresholdSpec::parse("10%");
  const auto rep = run(single, load_packets(single));
  EXPECT_EQ(rows[1].report.digests, rep.digests);
}
