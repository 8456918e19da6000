#ifndef ETRIE_ORACLE_HPP
#define ETRIE_ORACLE_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include "etrie/prefix.hpp"

namespace etrie {

using PrefixSet = std::set<Prefix>;

struct KeyWeight {
  std::uint32_t key = 0;
  std::uint64_t weight = 1;
};

struct KeyElement {
  std::uint32_t key = 0;
  std::uint32_t element = 0;
};

/// Exact ground truth for one window.
struct WindowTruth {
  std::size_t window = 0;
  PrefixSet hh_set;
  PrefixSet hhh_set;
  PrefixSet spreader_set;
};

namespace detail {

/// Volume per prefix at each level 0..depth.
inline std::vector<std::unordered_map<std::uint32_t, std::uint64_t>> level_volumes(std::span<const KeyWeight> items,
                                                                                 unsigned depth) {
  std::vector<std::unordered_map<std::uint32_t, std::uint64_t>> lv(depth + 1);
  for (const auto& it : items) lv[depth][it.key & prefix_mask(depth)] += it.weight;
  for (unsigned l = depth; l-- > 0;)
    for (const auto& [bits, v] : lv[l + 1]) lv[l][bits & prefix_mask(l)] += v;
  return lv;
}

}  // namespace detail

/// Every prefix of length 0..depth whose volume reaches T.
inline PrefixSet exact_hh(std::span<const KeyWeight> items, std::uint64_t threshold, unsigned depth) {
  PrefixSet out;
  const auto lv = detail::level_volumes(items, depth);
  for (unsigned l = 0; l <= depth; ++l)
    for (const auto& [bits, v] : lv[l])
      if (v >= threshold) out.insert(Prefix{bits, l});
  return out;
}

/// Hierarchical heavy hitters, computed bottom-up: a prefix qualifies when
/// the volume not already covered by a qualifying descendant reaches T.
inline PrefixSet exact_hhh(std::span<const KeyWeight> items, std::uint64_t threshold, unsigned depth) {
  PrefixSet out;
  std::unordered_map<std::uint32_t, std::uint64_t> residual;
  for (const auto& it : items) residual[it.key & prefix_mask(depth)] += it.weight;
  for (unsigned l = depth + 1; l-- > 0;) {
    std::unordered_map<std::uint32_t, std::uint64_t> up;
    for (const auto& [bits, v] : residual) {
      if (v >= threshold) {
        out.insert(Prefix{bits, l});
      } else if (l > 0) {
        up[bits & prefix_mask(l - 1)] += v;
      }
    }
    residual = std::move(up);
  }
  return out;
}

/// Same hierarchy over distinct elements (destinations) per source prefix.
/// A prefix qualifies when the elements reached from addresses not covered
/// by a qualifying descendant number at least N.
inline PrefixSet exact_spreaders(std::span<const KeyElement> pairs, std::uint64_t n_distinct, unsigned depth) {
  PrefixSet out;
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> residual;
  for (const auto& p : pairs) residual[p.key & prefix_mask(depth)].push_back(p.element);
  for (auto& [bits, v] : residual) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  for (unsigned l = depth + 1; l-- > 0;) {
    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> up;
    for (auto& [bits, v] : residual) {
      if (v.size() >= n_distinct) {
        out.insert(Prefix{bits, l});
      } else if (l > 0) {
        auto& dst = up[bits & prefix_mask(l - 1)];
        std::vector<std::uint32_t> merged;
        merged.reserve(dst.size() + v.size());
        std::set_union(dst.begin(), dst.end(), v.begin(), v.end(), std::back_inserter(merged));
        dst = std::move(merged);
      }
    }
    residual = std::move(up);
  }
  return out;
}

struct Score {
  double recall = 1.0;
  double precision = 1.0;
  std::size_t matched = 0;
  std::size_t truth = 0;
  std::size_t reported = 0;
};

/// Recall and precision with optional relaxation: a reported prefix also
/// matches a truth prefix it covers from at most `relax_bits` bits higher.
/// Matching is one-to-one; reported prefixes are taken longest first and
/// each claims the closest unmatched truth prefix.
inline Score score(const PrefixSet& reported, const PrefixSet& truth, unsigned relax_bits) {
  Score s;
  s.truth = truth.size();
  s.reported = reported.size();
  std::vector<Prefix> rep(reported.begin(), reported.end());
  std::stable_sort(rep.begin(), rep.end(), [](const Prefix& a, const Prefix& b) { return a.len() > b.len(); });
  std::vector<Prefix> tru(truth.begin(), truth.end());
  std::vector<bool> taken(tru.size(), false);
  for (const auto& r : rep) {
    std::size_t best = tru.size();
    unsigned best_gap = relax_bits + 1;
    for (std::size_t i = 0; i < tru.size(); ++i) {
      if (taken[i] || !r.covers(tru[i])) continue;
      const unsigned gap = tru[i].len() - r.len();
      if (gap <= relax_bits && gap < best_gap) {
        best = i;
        best_gap = gap;
      }
    }
    if (best < tru.size()) {
      taken[best] = true;
      ++s.matched;
    }
  }
  if (s.truth > 0) s.recall = static_cast<double>(s.matched) / static_cast<double>(s.truth);
  if (s.reported > 0) s.precision = static_cast<double>(s.matched) / static_cast<double>(s.reported);
  return s;
}

}  // namespace etrie

#endif  // ETRIE_ORACLE_HPP
