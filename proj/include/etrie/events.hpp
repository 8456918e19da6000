#ifndef ETRIE_EVENTS_HPP
#define ETRIE_EVENTS_HPP

#include <cstdint>
#include <optional>
#include <string_view>

#include "etrie/prefix.hpp"

namespace etrie {

enum class EventKind { hhh, hh, change, superspreader };

constexpr std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::hhh: return "HHH";
    case EventKind::hh: return "HH";
    case EventKind::change: return "Change";
    case EventKind::superspreader: return "Superspreader";
  }
  return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (auto k : {EventKind::hhh, EventKind::hh, EventKind::change, EventKind::superspreader})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// A push notification. `volume` is the counter sum at report time; for
/// change events it is the signed structural-change counter.
struct DetectionEvent {
  EventKind kind = EventKind::hhh;
  Prefix prefix;
  std::int64_t volume = 0;
  Timestamp timestamp = 0;
  Timestamp window_start = 0;

  friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

}  // namespace etrie

#endif  // ETRIE_EVENTS_HPP
