#ifndef ETRIE_NOTIFY_HPP
#define ETRIE_NOTIFY_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "etrie/events.hpp"

namespace etrie {

struct Digest {
  DetectionEvent event;
  std::uint64_t sequence = 0;
  Timestamp emitted_at = 0;

  friend bool operator==(const Digest&, const Digest&) = default;
};

/// One line of the event log. Field order is fixed:
/// kind, prefix, volume, ts, window_start, seq.
inline std::string to_json_line(const Digest& d) {
  std::string out = "{\"kind\":\"";
  out += to_string(d.event.kind);
  out += "\",\"prefix\":\"" + d.event.prefix.to_string();
  out += "\",\"volume\":" + std::to_string(d.event.volume);
  out += ",\"ts\":" + std::to_string(d.event.timestamp);
  out += ",\"window_start\":" + std::to_string(d.event.window_start);
  out += ",\"seq\":" + std::to_string(d.sequence) + "}";
  return out;
}

inline Digest parse_json_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  Digest d;
  const auto kind = parse_event_kind(j.at("kind").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown event kind in line: " + std::string(line));
  const auto prefix = Prefix::parse(j.at("prefix").get<std::string>());
  if (!prefix) throw std::invalid_argument("bad prefix in line: " + std::string(line));
  d.event.kind = *kind;
  d.event.prefix = *prefix;
  d.event.volume = j.at("volume").get<std::int64_t>();
  d.event.timestamp = j.at("ts").get<Timestamp>();
  d.event.window_start = j.at("window_start").get<Timestamp>();
  d.sequence = j.at("seq").get<std::uint64_t>();
  d.emitted_at = d.event.timestamp;
  return d;
}

/// Bounded single-producer single-consumer digest ring. emit() never blocks:
/// when the ring is full the digest is dropped and counted. Every emit takes
/// a sequence number, so dropped digests leave gaps.
class DigestQueue {
 public:
  explicit DigestQueue(std::size_t capacity) : slots_(capacity + 1) {
    if (capacity == 0) throw std::invalid_argument("digest queue capacity must be positive");
  }

  DigestQueue(const DigestQueue&) = delete;
  DigestQueue& operator=(const DigestQueue&) = delete;

  /// Producer side. Returns false when the digest was dropped.
  bool emit(const DetectionEvent& ev) {
    const std::uint64_t seq = next_seq_++;
    const std::size_t tail = tail_.load(std::memory_order_relaxed);
    const std::size_t next = (tail + 1) % slots_.size();
    if (next == head_.load(std::memory_order_acquire)) {
      dropped_.fetch_add(1, std::memory_order_relaxed);
      return false;
    }
    slots_[tail] = Digest{ev, seq, ev.timestamp};
    tail_.store(next, std::memory_order_release);
    recorded_.fetch_add(1, std::memory_order_relaxed);
    return true;
  }

  /// Consumer side.
  std::optional<Digest> try_pop() {
    const std::size_t head = head_.load(std::memory_order_relaxed);
    if (head == tail_.load(std::memory_order_acquire)) return std::nullopt;
    Digest d = slots_[head];
    head_.store((head + 1) % slots_.size(), std::memory_order_release);
    return d;
  }

  /// Consumer side: copies queued digests without removing them.
  std::vector<Digest> peek_all() const {
    std::vector<Digest> out;
    const std::size_t tail = tail_.load(std::memory_order_acquire);
    for (std::size_t i = head_.load(std::memory_order_relaxed); i != tail; i = (i + 1) % slots_.size())
      out.push_back(slots_[i]);
    return out;
  }

  std::size_t capacity() const { return slots_.size() - 1; }
  std::uint64_t emitted() const { return next_seq_; }
  std::uint64_t recorded() const { return recorded_.load(std::memory_order_relaxed); }
  std::uint64_t dropped() const { return dropped_.load(std::memory_order_relaxed); }

 private:
  std::vector<Digest> slots_;
  std::atomic<std::size_t> head_{0};
  std::atomic<std::size_t> tail_{0};
  std::uint64_t next_seq_ = 0;  // producer-owned
  std::atomic<std::uint64_t> recorded_{0};
  std::atomic<std::uint64_t> dropped_{0};
};

/// Drains a DigestQueue into an in-memory log and, optionally, a
/// line-delimited JSON stream.
class Collector {
 public:
  explicit Collector(DigestQueue& queue, std::ostream* out = nullptr) : queue_(&queue), out_(out) {}

  /// Moves everything currently queued into the log. Returns the count.
  std::size_t poll() {
    std::size_t n = 0;
    while (auto d = queue_->try_pop()) {
      if (out_) *out_ << to_json_line(*d) << '\n';
      log_.push_back(*d);
      ++n;
    }
    return n;
  }

  /// All digests received so far plus any still queued, in emission order.
  /// Does not consume anything.
  std::vector<Digest> dump() const {
    std::vector<Digest> out = log_;
    for (auto& d : queue_->peek_all()) out.push_back(d);
    return out;
  }

  const std::vector<Digest>& log() const { return log_; }

 private:
  DigestQueue* queue_;
  std::ostream* out_;
  std::vector<Digest> log_;
};

}  // namespace etrie

#endif  // ETRIE_NOTIFY_HPP
