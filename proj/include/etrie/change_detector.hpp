#ifndef ETRIE_CHANGE_DETECTOR_HPP
#define ETRIE_CHANGE_DETECTOR_HPP

#include <cstdint>
#include <cstdlib>
#include <deque>
#include <optional>
#include <stdexcept>

#include "etrie/config.hpp"
#include "etrie/events.hpp"

namespace etrie {

enum class StructureChange { expand, collapse };

struct ChangeConfig {
  std::int64_t alarm_threshold = 50;
  Duration window = 20 * kMicrosPerSecond;  // moving-average span
  Duration tick = 1 * kMicrosPerSecond;     // reporting granularity

  void validate() const {
    if (alarm_threshold <= 0) throw ConfigError("change alarm threshold must be positive");
    if (window == 0 || tick == 0) throw ConfigError("change window and tick must be positive");
    if (tick > window) throw ConfigError("change tick must not exceed the window");
  }
};

/// Global expand-minus-collapse counter. Alarms when the counter magnitude
/// reaches the threshold, then starts over from zero.
class ChangeDetector {
 public:
  explicit ChangeDetector(ChangeConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  std::optional<DetectionEvent> on_structure_change(StructureChange kind, Timestamp ts) {
    const int delta = kind == StructureChange::expand ? 1 : -1;
    counter_ += delta;
    net_ += delta;
    history_.push_back({ts, delta});
    prune(ts);
    if (std::llabs(counter_) < cfg_.alarm_threshold) return std::nullopt;
    DetectionEvent ev{EventKind::change, Prefix::root(), counter_, ts, last_reset_ts_};
    counter_ = 0;
    last_reset_ts_ = ts;
    ++alarms_;
    return ev;
  }

  /// Sum of deltas in (ts - window, ts] divided by window / tick, i.e. the
  /// mean net change per tick over the trailing window.
  double moving_average(Timestamp ts) {
    prune(ts);
    return window_average(ts);
  }

  double window_average(Timestamp ts) const {
    std::int64_t sum = 0;
    for (const auto& s : history_)
      if (s.ts <= ts && s.ts + cfg_.window > ts) sum += s.delta;
    return static_cast<double>(sum) / window_ticks();
  }

  double window_ticks() const { return static_cast<double>(cfg_.window) / static_cast<double>(cfg_.tick); }

  std::int64_t counter() const { return counter_; }
  Timestamp last_reset_ts() const { return last_reset_ts_; }
  /// Expansions minus collapses since construction, unaffected by alarms.
  std::int64_t net_changes() const { return net_; }
  std::uint64_t alarms() const { return alarms_; }
  const ChangeConfig& config() const { return cfg_; }

 private:
  struct Sample {
    Timestamp ts;
    int delta;
  };

  void prune(Timestamp ts) {
    while (!history_.empty() && history_.front().ts + cfg_.window <= ts) history_.pop_front();
  }

  ChangeConfig cfg_;
  std::int64_t counter_ = 0;
  std::int64_t net_ = 0;
  Timestamp last_reset_ts_ = 0;
  std::uint64_t alarms_ = 0;
  std::deque<Sample> history_;
};

}  // namespace etrie

#endif  // ETRIE_CHANGE_DETECTOR_HPP
