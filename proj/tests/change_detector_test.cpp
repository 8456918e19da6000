#include <gtest/gtest.h>

#include "etrie/change_detector.hpp"
#include "etrie/trie.hpp"

using namespace etrie;

namespace {
constexpr Duration kS = kMicrosPerSecond;
}

TEST(Change, FiftyExpansionsRaiseOneAlarm) {
  ChangeDetector d(ChangeConfig{50, 20 * kS, kS});
  int events = 0;
  for (int i = 0; i < 50; ++i) {
    auto ev = d.on_structure_change(StructureChange::expand, static_cast<Timestamp>(i) * 1000);
    if (ev) {
      ++events;
      EXPECT_EQ(ev->kind, EventKind::change);
      EXPECT_EQ(ev->volume, 50);
      EXPECT_EQ(i, 49);
    }
  }
  EXPECT_EQ(events, 1);
  EXPECT_EQ(d.counter(), 0);
  EXPECT_EQ(d.alarms(), 1u);
  EXPECT_EQ(d.net_changes(), 50);
  EXPECT_EQ(d.last_reset_ts(), 49'000u);
}

TEST(Change, BalancedStreamStaysQuiet) {
  ChangeDetector d(ChangeConfig{5, 20 * kS, kS});
  for (int i = 0; i < 10'000; ++i) {
    const auto kind = i % 2 ? StructureChange::collapse : StructureChange::expand;
    EXPECT_FALSE(d.on_structure_change(kind, static_cast<Timestamp>(i)).has_value());
    EXPECT_LE(std::llabs(d.counter()), 1);
  }
}

TEST(Change, CollapsesAlarmNegative) {
  ChangeDetector d(ChangeConfig{50, 20 * kS, kS});
  std::optional<DetectionEvent> last;
  for (int i = 0; i < 50; ++i)
    if (auto ev = d.on_structure_change(StructureChange::collapse, static_cast<Timestamp>(i))) last = ev;
  ASSERT_TRUE(last.has_value());
  EXPECT_EQ(last->volume, -50);
}

TEST(Change, MovingAverage) {
  ChangeDetector d(ChangeConfig{1000, 20 * kS, kS});
  EXPECT_EQ(d.moving_average(0), 0.0);
  for (int i = 0; i < 30; ++i) d.on_structure_change(StructureChange::expand, 5 * kS);
  EXPECT_DOUBLE_EQ(d.moving_average(5 * kS), 30.0 / 20.0);
  EXPECT_DOUBLE_EQ(d.moving_average(24 * kS), 30.0 / 20.0);
  EXPECT_DOUBLE_EQ(d.moving_average(25 * kS), 0.0);
}

TEST(Change, InvalidConfigRejected) {
  EXPECT_THROW(ChangeDetector(ChangeConfig{0, kS, kS}), ConfigError);
  EXPECT_THROW(ChangeDetector(ChangeConfig{5, kS, 2 * kS}), ConfigError);
}

TEST(Change, TrieHookCountsExpandMinusCollapse) {
  ElasticTrie t(TrieConfig::uniform(2, kS, 10 * kS, {}, 8), MemoryBudget::unlimited(), ChangeConfig{1'000'000, kS, kS});
  std::uint64_t ts = 0;
  for (int round = 0; round < 50; ++round) {
    for (std::uint32_t k = 0; k < 16; ++k) t.process_packet(k << 28, ts += 1000, 1);
    ts += (round % 3 == 0) ? 2 * kS : 1000;
  }
  const auto& s = t.stats();
  EXPECT_GT(s.collapses, 0u);
  EXPECT_EQ(t.change_detector()->net_changes(),
            static_cast<std::int64_t>(s.expansions) - static_cast<std::int64_t>(s.collapses));
}
