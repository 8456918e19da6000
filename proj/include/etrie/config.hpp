#ifndef ETRIE_CONFIG_HPP
#define ETRIE_CONFIG_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "etrie/events.hpp"
#include "etrie/prefix.hpp"

namespace etrie {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class CountMode { packets, bytes };

/// Per-level active timeout from the variable-timeout family f_y:
/// (y / (32 - level)) * base while that ratio is below one, otherwise base.
/// Level 32 has no defined ratio and gets the base timeout.
constexpr Duration active_timeout_fn(unsigned y, unsigned level, Duration base) {
  if (level >= kMaxPrefixLen) return base;
  const unsigned span = kMaxPrefixLen - level;
  if (y < span) return base * y / span;
  return base;
}

/// `fixed` or `f:<y>` with y >= 1.
struct TimeoutPolicy {
  unsigned y = 0;  // 0 means fixed

  bool fixed() const { return y == 0; }

  std::array<Duration, kLevels> timeouts(Duration base) const {
    std::array<Duration, kLevels> out{};
    for (unsigned l = 0; l < kLevels; ++l) out[l] = fixed() ? base : active_timeout_fn(y, l, base);
    return out;
  }

  std::string to_string() const { return fixed() ? "fixed" : "f:" + std::to_string(y); }

  static TimeoutPolicy parse(std::string_view s) {
    if (s == "fixed") return {};
    if (s.size() > 2 && s.substr(0, 2) == "f:") {
      unsigned y = 0;
      auto tail = s.substr(2);
      auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), y);
      if (ec == std::errc{} && p == tail.data() + tail.size() && y >= 1) return {y};
    }
    throw ConfigError("timeout function must be 'fixed' or 'f:<y>' with y >= 1, got '" + std::string(s) + "'");
  }
};

struct TrieConfig {
  std::array<std::uint64_t, kLevels> threshold_per_level{};
  std::array<Duration, kLevels> active_timeout_per_level{};
  Duration inactive_timeout = 300 * kMicrosPerSecond;
  CountMode count_mode = CountMode::packets;
  bool report_hh_on_expand = false;
  unsigned max_depth = kMaxPrefixLen;
  // Kind attached to reports from kept nodes: hhh, or superspreader when the
  // counters count distinct flows.
  EventKind report_kind = EventKind::hhh;

  std::uint64_t threshold(unsigned level) const { return threshold_per_level[level]; }
  Duration active_timeout(unsigned level) const { return active_timeout_per_level[level]; }

  /// One threshold replicated across levels, timeouts from `policy`.
  static TrieConfig uniform(std::uint64_t threshold, Duration active, Duration inactive,
                            TimeoutPolicy policy = {}, unsigned max_depth = kMaxPrefixLen) {
    TrieConfig c;
    c.threshold_per_level.fill(threshold);
    c.active_timeout_per_level = policy.timeouts(active);
    c.inactive_timeout = inactive;
    c.max_depth = max_depth;
    return c;
  }

  /// Thresholds proportional to each level's window: fraction * rate * t_A(level),
  /// where rate is volume per second. Levels whose product rounds to zero get 1.
  static TrieConfig rate_scaled(double fraction, double rate_per_second, Duration active, Duration inactive,
                                TimeoutPolicy policy = {}, unsigned max_depth = kMaxPrefixLen) {
    TrieConfig c = uniform(1, active, inactive, policy, max_depth);
    for (unsigned l = 0; l < kLevels; ++l) {
      const double t = fraction * rate_per_second * static_cast<double>(c.active_timeout_per_level[l]) / 1e6;
      c.threshold_per_level[l] = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(t)));
    }
    return c;
  }

  void validate() const {
    if (max_depth < 1 || max_depth > kMaxPrefixLen) throw ConfigError("max_depth must be in 1..32");
    if (inactive_timeout == 0) throw ConfigError("inactive timeout must be positive");
    for (unsigned l = 0; l <= max_depth; ++l) {
      if (threshold_per_level[l] == 0)
        throw ConfigError("threshold at level " + std::to_string(l) + " must be positive");
      if (active_timeout_per_level[l] == 0)
        throw ConfigError("active timeout at level " + std::to_string(l) + " must be positive");
      if (active_timeout_per_level[l] > inactive_timeout)
        throw ConfigError("active timeout at level " + std::to_string(l) + " exceeds the inactive timeout");
    }
  }
};

}  // namespace etrie

#endif  // ETRIE_CONFIG_HPP
