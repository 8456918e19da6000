#ifndef ETRIE_TESTS_FIXTURES_HPP
#define ETRIE_TESTS_FIXTURES_HPP

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "etrie/oracle.hpp"
#include "etrie/prefix.hpp"
#include "etrie/traces.hpp"

namespace fixtures {

using namespace etrie;

// Per-window volumes of the eight three-bit leaves 000..111.
inline constexpr std::array<std::uint64_t, 8> kFig4Leaves{4, 4, 12, 3, 11, 3, 6, 7};
inline constexpr std::uint64_t kFig4Threshold = 10;

inline std::uint32_t leaf_key(unsigned leaf) { return static_cast<std::uint32_t>(leaf) << 29; }

/// The three-bit example repeated over `windows` one-second windows, leaves
/// interleaved by smooth weighted round robin and evenly spaced in time.
/// Matches scenarios/fig4_fixture.csv.
inline std::vector<PacketRecord> fig4_packets(unsigned windows) {
  std::uint64_t per = 0;
  for (auto v : kFig4Leaves) per += v;
  std::vector<PacketRecord> out;
  for (unsigned w = 0; w < windows; ++w) {
    std::array<std::int64_t, 8> cur{};
    for (std::uint64_t i = 0; i < per; ++i) {
      unsigned best = 0;
      for (unsigned k = 0; k < 8; ++k) {
        cur[k] += static_cast<std::int64_t>(kFig4Leaves[k]);
        if (cur[k] > cur[best]) best = k;
      }
      cur[best] -= static_cast<std::int64_t>(per);
      const Timestamp ts = Timestamp{w} * kMicrosPerSecond + i * (kMicrosPerSecond / per);
      out.push_back({ts, leaf_key(best), 0x0A000000u + best, 100});
    }
  }
  return out;
}

inline std::vector<KeyWeight> fig4_items() {
  std::vector<KeyWeight> items;
  for (unsigned k = 0; k < 8; ++k) items.push_back({leaf_key(k), kFig4Leaves[k]});
  return items;
}

inline PrefixSet bitset(std::initializer_list<const char*> xs) {
  PrefixSet s;
  for (auto x : xs) s.insert(*Prefix::parse_bits(x));
  return s;
}

/// Independent top-down HHH on a `depth`-bit space: enumerate every prefix,
/// and a prefix is an HHH when its volume minus the volume of all maximal
/// HHH descendants reaches T. Processes lengths from longest to shortest and
/// subtracts, through inclusion-exclusion over the descendant antichain, the
/// volume already claimed.
inline PrefixSet brute_force_hhh(const std::vector<KeyWeight>& items, std::uint64_t t, unsigned depth) {
  std::map<Prefix, std::uint64_t> vol;
  for (unsigned l = 0; l <= depth; ++l)
    for (std::uint32_t v = 0; v < (1u << l); ++v) vol[Prefix{l == 0 ? 0 : v << (32 - l), l}] = 0;
  for (const auto& it : items)
    for (unsigned l = 0; l <= depth; ++l) vol[Prefix{it.key, l}] += it.weight;
  PrefixSet hhh;
  for (unsigned l = depth + 1; l-- > 0;) {
    for (const auto& [p, v] : vol) {
      if (p.len() != l) continue;
      // Maximal HHH descendants: HHH strictly below p not covered by another
      // HHH strictly below p. Their subtrees are disjoint, so the union's
      // volume is the plain sum (all higher inclusion-exclusion terms vanish).
      std::uint64_t claimed = 0;
      for (const auto& h : hhh) {
        if (h == p || !p.covers(h)) continue;
        bool maximal = true;
        for (const auto& g : hhh)
          if (g != h && g != p && p.covers(g) && g.covers(h)) maximal = false;
        if (maximal) claimed += vol[h];
      }
      if (v - claimed >= t) hhh.insert(p);
    }
  }
  return hhh;
}

inline std::vector<KeyWeight> random_window(std::mt19937_64& rng, unsigned depth, std::size_t n) {
  std::vector<KeyWeight> items;
  std::uniform_int_distribution<std::uint32_t> hot(0, 3);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t leaf = static_cast<std::uint32_t>(rng() % (1u << depth));
    if (hot(rng) == 0) leaf = static_cast<std::uint32_t>(rng() % 4);  // skew toward a few leaves
    items.push_back({leaf << (32 - depth), 1 + rng() % 3});
  }
  return items;
}

}  // namespace fixtures

#endif  // ETRIE_TESTS_FIXTURES_HPP
