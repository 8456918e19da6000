#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "etrie/oracle.hpp"
#include "fixtures.hpp"

using namespace etrie;
using fixtures::bitset;

TEST(Oracle, Fig4HeavyHitters) {
  const auto items = fixtures::fig4_items();
  const auto hh = exact_hh(items, fixtures::kFig4Threshold, 3);
  // Root carries all 50 units, so it is an HH as well.
  EXPECT_EQ(hh, bitset({"***", "0**", "1**", "01*", "10*", "11*", "010", "100"}));
}

TEST(Oracle, Fig4HierarchicalHeavyHitters) {
  const auto items = fixtures::fig4_items();
  const auto hhh = exact_hhh(items, fixtures::kFig4Threshold, 3);
  EXPECT_EQ(hhh, bitset({"0**", "11*", "010", "100"}));
  // 1** is heavy (27) but its HHH descendants 100 and 11* claim 24 of it.
  EXPECT_FALSE(hhh.contains(*Prefix::parse_bits("1**")));
  EXPECT_TRUE(std::includes(exact_hh(items, 10, 3).begin(), exact_hh(items, 10, 3).end(), hhh.begin(), hhh.end()));
}

TEST(Oracle, SingleFlowAtThresholdMakesEveryAncestorHeavy) {
  const std::vector<KeyWeight> items{{0xDEADBEEFu, 7}};
  const auto hh = exact_hh(items, 7, 32);
  EXPECT_EQ(hh.size(), 33u);
  for (const auto& p : hh) EXPECT_TRUE(p.contains(0xDEADBEEFu));
  EXPECT_EQ(exact_hhh(items, 7, 32), PrefixSet{Prefix(0xDEADBEEFu, 32)});
}

TEST(Oracle, UniformTrafficOnlyRootQualifies) {
  std::vector<KeyWeight> items;
  for (std::uint32_t i = 0; i < 256; ++i) items.push_back({i << 24, 1});
  EXPECT_EQ(exact_hhh(items, 200, 8), PrefixSet{Prefix::root()});
  // At 100 each half (128) qualifies and leaves nothing for the root.
  EXPECT_EQ(exact_hhh(items, 100, 8), bitset({"0", "1"}));
}

TEST(Oracle, BottomUpMatchesBruteForce) {
  std::mt19937_64 rng(2024);
  for (int w = 0; w < 200; ++w) {
    const auto items = fixtures::random_window(rng, 8, 50 + rng() % 400);
    const std::uint64_t t = 5 + rng() % 60;
    const auto fast = exact_hhh(items, t, 8);
    ASSERT_EQ(fast, fixtures::brute_force_hhh(items, t, 8)) << "window " << w;
    const auto hh = exact_hh(items, t, 8);
    ASSERT_TRUE(std::includes(hh.begin(), hh.end(), fast.begin(), fast.end()));
  }
}

TEST(Oracle, HeavyHittersMatchEnumeration) {
  std::mt19937_64 rng(7);
  const auto items = fixtures::random_window(rng, 8, 300);
  const auto hh = exact_hh(items, 20, 8);
  for (unsigned l = 0; l <= 8; ++l)
    for (std::uint32_t v = 0; v < (1u << l); ++v) {
      const Prefix p{l == 0 ? 0 : v << (32 - l), l};
      std::uint64_t vol = 0;
      for (const auto& it : items) vol += p.contains(it.key) ? it.weight : 0;
      EXPECT_EQ(hh.contains(p), vol >= 20) << p.to_bit_string(8);
    }
}

TEST(Oracle, SpreaderHierarchy) {
  std::vector<KeyElement> pairs;
  const std::uint32_t src = 0x01020304u;
  for (std::uint32_t d = 0; d < 10; ++d) pairs.push_back({src, d});
  const auto s = exact_spreaders(pairs, 10, 32);
  EXPECT_EQ(s, PrefixSet{Prefix(src, 32)});  // ancestors have nothing left after exclusion
  std::vector<KeyElement> duplicate_dsts = pairs;
  for (std::uint32_t d = 0; d < 10; ++d) duplicate_dsts.push_back({src, d});
  EXPECT_EQ(exact_spreaders(duplicate_dsts, 11, 32), PrefixSet{});
}

TEST(Oracle, SpreaderAggregatesDistinctAcrossSources) {
  // Two sources in 10.0.0.0/31 each reach 6 destinations, 2 shared: neither
  // qualifies alone at N=10, their /31 sees 10 distinct.
  std::vector<KeyElement> pairs;
  for (std::uint32_t d = 0; d < 6; ++d) pairs.push_back({0x0A000000u, d});
  for (std::uint32_t d = 4; d < 10; ++d) pairs.push_back({0x0A000001u, d});
  EXPECT_EQ(exact_spreaders(pairs, 10, 32), PrefixSet{Prefix(0x0A000000u, 31)});
}

TEST(Oracle, AllFlowsToOneDestinationIsNoSpreader) {
  std::vector<KeyElement> pairs;
  for (std::uint32_t s = 0; s < 1000; ++s) pairs.push_back({s << 8, 0x08080808u});
  EXPECT_TRUE(exact_spreaders(pairs, 2, 24).empty());
}

TEST(Score, IdentityIsPerfect) {
  const auto t = bitset({"0**", "11*", "010"});
  const auto s = score(t, t, 0);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_EQ(s.precision, 1.0);
}

TEST(Score, RelaxationAcceptsCoarserAncestor) {
  const auto truth = bitset({"010"});
  const auto rep = bitset({"0**"});
  EXPECT_EQ(score(rep, truth, 2).recall, 1.0);
  EXPECT_EQ(score(rep, truth, 2).precision, 1.0);
  EXPECT_EQ(score(rep, truth, 0).recall, 0.0);
  EXPECT_EQ(score(rep, truth, 0).precision, 0.0);
  EXPECT_EQ(score(bitset({"***"}), truth, 2).recall, 0.0);  // three bits coarser
}

TEST(Score, HalfMatched) {
  const auto s = score(bitset({"010", "111"}), bitset({"010", "100"}), 0);
  EXPECT_EQ(s.recall, 0.5);
  EXPECT_EQ(s.precision, 0.5);
}

TEST(Score, OneToOneMatching) {
  // One coarse report cannot claim two truth prefixes.
  const auto s = score(bitset({"0**"}), bitset({"010", "011"}), 2);
  EXPECT_EQ(s.matched, 1u);
  EXPECT_EQ(s.recall, 0.5);
  EXPECT_EQ(s.precision, 1.0);
}

TEST(Score, EmptyDenominatorsGiveOne) {
  EXPECT_EQ(score({}, {}, 0).recall, 1.0);
  EXPECT_EQ(score({}, bitset({"1"}), 0).precision, 1.0);
  EXPECT_EQ(score(bitset({"1"}), {}, 0).recall, 1.0);
  EXPECT_EQ(score(bitset({"1"}), {}, 0).precision, 0.0);
}

TEST(Score, RelaxationIsMonotone) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 2000; ++i) {
    PrefixSet a, b;
    for (int k = 0; k < 6; ++k) {
      a.insert(Prefix{static_cast<std::uint32_t>(rng()), static_cast<unsigned>(rng() % 9)});
      b.insert(Prefix{static_cast<std::uint32_t>(rng()), static_cast<unsigned>(rng() % 9)});
    }
    const auto s0 = score(a, b, 0), s2 = score(a, b, 2);
    ASSERT_GE(s2.recall, s0.recall);
    ASSERT_GE(s2.precision, s0.precision);
    ASSERT_GE(s0.recall, 0.0);
    ASSERT_LE(s2.precision, 1.0);
  }
}
