#ifndef ETRIE_DETECTOR_HPP
#define ETRIE_DETECTOR_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "etrie/change_detector.hpp"
#include "etrie/config.hpp"
#include "etrie/lpm_stage.hpp"
#include "etrie/spread_filter.hpp"
#include "etrie/traces.hpp"
#include "etrie/trie.hpp"

namespace etrie {

/// hhh: key = source, counters count packets or bytes.
/// spread: key = source, counters count new (prefix, destination) pairs.
/// ddos_victim: key = destination, counters count new (prefix, source) pairs.
enum class Mode { hhh, spread, ddos_victim };

constexpr std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::hhh: return "hhh";
    case Mode::spread: return "spread";
    case Mode::ddos_victim: return "ddos-victim";
  }
  return "?";
}

inline Mode parse_mode(std::string_view s) {
  for (auto m : {Mode::hhh, Mode::spread, Mode::ddos_victim})
    if (to_string(m) == s) return m;
  throw ConfigError("mode must be hhh, spread or ddos-victim, got '" + std::string(s) + "'");
}

struct DetectorConfig {
  Mode mode = Mode::hhh;
  TrieConfig trie;
  MemoryBudget budget = MemoryBudget::unlimited();
  std::size_t filter_bits = 8 * 32 * 1024;
  unsigned filter_hashes = 4;
  Duration filter_epoch = 0;  // 0: the longest per-level active timeout
  std::optional<ChangeConfig> change;
};

/// Trie plus the per-mode keying and, in spread modes, the distinct-flow
/// filter in front of the counters.
class Detector {
 public:
  explicit Detector(DetectorConfig cfg)
      : cfg_(prepare(std::move(cfg))),
        trie_(cfg_.trie, cfg_.budget, cfg_.change),
        filter_(cfg_.filter_bits, cfg_.filter_hashes) {}

  std::uint32_t key_of(const PacketRecord& p) const { return cfg_.mode == Mode::ddos_victim ? p.dst : p.src; }
  std::uint32_t element_of(const PacketRecord& p) const { return cfg_.mode == Mode::ddos_victim ? p.src : p.dst; }

  StepResult on_packet(const PacketRecord& p) {
    if (cfg_.mode == Mode::hhh) {
      const std::uint64_t w = cfg_.trie.count_mode == CountMode::bytes ? p.length : 1;
      return trie_.process_packet(p.src, p.ts, w);
    }
    if (p.ts >= epoch_end_) {
      if (epoch_end_ != 0) {
        filter_.rotate();
        if (p.ts >= epoch_end_ + cfg_.filter_epoch) filter_.rotate();
      }
      epoch_end_ = (p.ts / cfg_.filter_epoch + 1) * cfg_.filter_epoch;
    }
    const std::uint32_t key = key_of(p);
    const std::uint32_t element = element_of(p);
    // Keyed by the half the packet counts toward, so each side counter
    // counts its own distinct elements.
    return trie_.process_packet_with(key, p.ts, [&](const Prefix& matched, Timestamp window) -> std::uint64_t {
      const Prefix half = matched.len() < kMaxPrefixLen ? matched.child(matched.side_of(key)) : matched;
      return filter_.test_and_set(half, window, element) ? 1 : 0;
    });
  }

  const DetectorConfig& config() const { return cfg_; }
  const ElasticTrie& trie() const { return trie_; }
  ElasticTrie& trie() { return trie_; }
  const WindowedFilter& filter() const { return filter_; }

 private:
  static DetectorConfig prepare(DetectorConfig cfg) {
    if (cfg.mode != Mode::hhh) cfg.trie.report_kind = EventKind::superspreader;
    if (cfg.filter_epoch == 0)
      cfg.filter_epoch = *std::max_element(cfg.trie.active_timeout_per_level.begin(),
                                           cfg.trie.active_timeout_per_level.begin() + cfg.trie.max_depth + 1);
    if (cfg.filter_epoch == 0) throw ConfigError("filter epoch must be positive");
    return cfg;
  }

  DetectorConfig cfg_;
  ElasticTrie trie_;
  WindowedFilter filter_;
  Timestamp epoch_end_ = 0;
};

}  // namespace etrie

#endif  // ETRIE_DETECTOR_HPP
