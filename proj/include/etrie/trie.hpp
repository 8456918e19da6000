#ifndef ETRIE_TRIE_HPP
#define ETRIE_TRIE_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "etrie/change_detector.hpp"
#include "etrie/config.hpp"
#include "etrie/events.hpp"
#include "etrie/lpm_stage.hpp"
#include "etrie/prefix.hpp"

namespace etrie {

/// Input clock went backwards, or past the 48-bit timestamp range.
class ClockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ActionKind { invalidate, expand, keep, collapse, update };

constexpr std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::invalidate: return "invalidate";
    case ActionKind::expand: return "expand";
    case ActionKind::keep: return "keep";
    case ActionKind::collapse: return "collapse";
    case ActionKind::update: return "update";
  }
  return "?";
}

struct Action {
  ActionKind kind = ActionKind::update;
  unsigned side = 0;  // meaningful for expand and update

  friend bool operator==(const Action&, const Action&) = default;
};

/// Picks the single action for a packet hitting `node` at `level`.
///
/// The guards partition the node age pkt_ts - node.ts:
///   age >= t_I                  -> invalidate
///   t_A(level) <= age < t_I     -> keep if c0 + c1 >= T(level), else collapse
///   age < t_A(level)            -> expand(subbit) if the packet brings that counter to T(level),
///                                  else update
/// A node at the maximum depth never expands.
inline Action classify_action(const NodeRecord& node, unsigned level, Timestamp pkt_ts, unsigned subbit,
                              std::uint64_t weight, const TrieConfig& cfg) {
  if (pkt_ts < node.ts)
    throw ClockError("packet timestamp " + std::to_string(pkt_ts) + " precedes node timestamp " +
                     std::to_string(node.ts));
  const Duration age = pkt_ts - node.ts;
  if (age >= cfg.inactive_timeout) return {ActionKind::invalidate, 0};
  if (age >= cfg.active_timeout(level))
    return {node.sum() >= cfg.threshold(level) ? ActionKind::keep : ActionKind::collapse, 0};
  if (level < cfg.max_depth && node.counter(subbit) + weight >= cfg.threshold(level))
    return {ActionKind::expand, subbit};
  return {ActionKind::update, subbit};
}

struct StepResult {
  Action action;
  Prefix matched;
  std::optional<Prefix> applied_to;  // node whose counter took the packet weight
  unsigned applied_side = 0;
  std::uint64_t applied_weight = 0;
  bool table_full = false;
  std::uint64_t reclaimed_volume = 0;  // counters of expired nodes evicted to make room
  std::vector<DetectionEvent> events;
};

struct ExpandResult {
  Prefix child;
  bool inserted = false;
  std::uint64_t parent_counter = 0;  // value of the triggering counter before reset
};

struct CollapseResult {
  Prefix parent;
  bool parent_stored = false;  // false when the parent table was full
};

struct TrieStats {
  std::uint64_t packets = 0;
  std::uint64_t expansions = 0;
  std::uint64_t collapses = 0;
  std::uint64_t keeps = 0;
  std::uint64_t invalidations = 0;
  std::uint64_t updates = 0;
  std::uint64_t root_resets = 0;
  std::uint64_t table_full = 0;
  std::uint64_t reclaims = 0;  // expired occupants evicted by an insert
};

/// Self-adjusting prefix trie stored as one table per prefix length.
///
/// Starts from the root alone. Each packet resolves to its longest stored
/// prefix and triggers exactly one of invalidate, expand, keep, collapse or
/// update. The root is permanent: where another node would be invalidated
/// or collapsed, the root instead resets its counters and timestamp.
///
/// Single writer. Reading statistics between packets is safe; concurrent
/// mutation is not.
class ElasticTrie {
 public:
  ElasticTrie(TrieConfig cfg, const MemoryBudget& budget, std::optional<ChangeConfig> change = std::nullopt)
      : cfg_(validated(std::move(cfg))), tables_(budget, cfg_.max_depth) {
    if (change) change_.emplace(*change);
    tables_.insert(Prefix::root(), NodeRecord{});
  }

  const TrieConfig& config() const { return cfg_; }
  const LpmTables& tables() const { return tables_; }
  const TrieStats& stats() const { return stats_; }
  const std::optional<ChangeDetector>& change_detector() const { return change_; }
  std::optional<ChangeDetector>& change_detector() { return change_; }

  std::size_t node_count() const { return tables_.node_count(); }
  unsigned depth() const { return tables_.depth(); }
  std::uint64_t bits_in_use() const { return tables_.bits_in_use(); }

  std::optional<NodeRecord> find(const Prefix& p) const {
    const NodeRecord* n = tables_.find(p);
    return n ? std::optional<NodeRecord>(*n) : std::nullopt;
  }

  Prefix lookup(std::uint32_t key) { return tables_.lookup(key).prefix; }

  std::vector<std::pair<Prefix, NodeRecord>> snapshot() const {
    std::vector<std::pair<Prefix, NodeRecord>> out;
    tables_.for_each([&](const Prefix& p, const NodeRecord& r) { out.emplace_back(p, r); });
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

  StepResult process_packet(std::uint32_t key, Timestamp ts, std::uint64_t weight) {
    return process_packet_with(key, ts, [weight](const Prefix&, Timestamp) { return weight; });
  }

  /// Same as process_packet, with the weight computed from the matched
  /// prefix and the start of the counting window the packet falls in (the
  /// node's timestamp, or the packet's own when the node's window is over).
  /// Spread mode uses this to consult its filter.
  template <class WeightFn>
  StepResult process_packet_with(std::uint32_t key, Timestamp ts, WeightFn&& weight_of) {
    if (ts > kTimestampMax) throw ClockError("timestamp exceeds the 48-bit range");
    if (ts < last_ts_)
      throw ClockError("non-monotonic input clock: " + std::to_string(ts) + " after " + std::to_string(last_ts_));
    last_ts_ = ts;
    ++stats_.packets;

    LpmMatch m = tables_.lookup(key);
    StepResult r;
    r.matched = m.prefix;
    const unsigned level = m.prefix.len();
    const bool window_over = ts >= m.node->ts && ts - m.node->ts >= cfg_.active_timeout(level);
    const std::uint64_t w = weight_of(m.prefix, window_over ? ts : m.node->ts);
    const unsigned side = m.prefix.side_of(key);
    r.action = classify_action(*m.node, m.prefix.len(), ts, side, w, cfg_);

    switch (r.action.kind) {
      case ActionKind::invalidate:
        if (m.prefix.is_root()) {
          reset_root(ts);
        } else {
          apply_invalidate(m.prefix);
        }
        break;

      case ActionKind::expand: {
        const ExpandResult ex = apply_expand(m.prefix, side, ts);
        if (ex.inserted) {
          account(r, ex.child, ex.child.side_of(key), w);
        } else {
          r.table_full = true;
          account(r, m.prefix, side, w);
        }
        if (cfg_.report_hh_on_expand && ex.inserted)
          r.events.push_back({EventKind::hh, ex.child, static_cast<std::int64_t>(ex.parent_counter + w), ts, ts});
        break;
      }

      case ActionKind::keep:
        r.events.push_back(apply_keep(m.prefix, ts));
        account(r, m.prefix, side, w);
        break;

      case ActionKind::collapse:
        if (m.prefix.is_root()) {
          reset_root(ts);
          account(r, m.prefix, side, w);
        } else {
          const CollapseResult col = apply_collapse(m.prefix, ts);
          if (col.parent_stored) {
            account(r, col.parent, col.parent.side_of(key), w);
          } else {
            r.table_full = true;
            const Prefix fallback = tables_.lookup(key).prefix;
            account(r, fallback, fallback.side_of(key), w);
          }
        }
        break;

      case ActionKind::update:
        ++stats_.updates;
        account(r, m.prefix, side, w);
        break;
    }

    for (auto& ev : pending_) r.events.push_back(ev);
    pending_.clear();
    r.reclaimed_volume = std::exchange(reclaimed_volume_, 0);
    return r;
  }

  /// Removes a non-root node. Its parent is neither reinserted nor renewed
  /// and its descendants stay in place.
  void apply_invalidate(const Prefix& p) {
    if (p.is_root()) throw std::logic_error("the root node is never invalidated");
    if (tables_.erase(p) == EraseStatus::ok) ++stats_.invalidations;
  }

  /// Zeroes the triggering counter and inserts the child on `side` with zero
  /// counters and timestamp `ts`. At the maximum depth nothing changes.
  ExpandResult apply_expand(const Prefix& p, unsigned side, Timestamp ts) {
    NodeRecord* node = require(p);
    if (p.len() >= cfg_.max_depth) return {p, false, node->counter(side)};
    ExpandResult ex{p.child(side), false, node->counter(side)};
    node->counter(side) = 0;
    if (place(ex.child, NodeRecord{0, 0, ts, ex.child.bits()}, ts) == InsertStatus::ok) {
      ex.inserted = true;
      ++stats_.expansions;
      notify_change(StructureChange::expand, ts);
    } else {
      ++stats_.table_full;
    }
    return ex;
  }

  /// Reports the node, then resets its counters and timestamp.
  DetectionEvent apply_keep(const Prefix& p, Timestamp ts) {
    NodeRecord* node = require(p);
    DetectionEvent ev{cfg_.report_kind, p, static_cast<std::int64_t>(node->sum()), ts, node->ts};
    node->c0 = node->c1 = 0;
    node->ts = ts;
    ++stats_.keeps;
    return ev;
  }

  /// Deletes a non-root node and inserts or renews its one-bit-shorter
  /// parent with zero counters and timestamp `ts`.
  CollapseResult apply_collapse(const Prefix& p, Timestamp ts) {
    if (p.is_root()) throw std::logic_error("the root node is never collapsed");
    tables_.erase(p);
    ++stats_.collapses;
    notify_change(StructureChange::collapse, ts);
    CollapseResult col{p.parent(), false};
    const NodeRecord fresh{0, 0, ts, col.parent.bits()};
    if (NodeRecord* parent = tables_.find(col.parent)) {
      *parent = fresh;
      col.parent_stored = true;
    } else if (place(col.parent, fresh, ts) == InsertStatus::ok) {
      col.parent_stored = true;
    } else {
      ++stats_.table_full;
    }
    return col;
  }

  /// Change events raised by direct apply_* calls since the last packet.
  std::vector<DetectionEvent> take_pending_events() { return std::exchange(pending_, {}); }

 private:
  static TrieConfig validated(TrieConfig cfg) {
    cfg.validate();
    return cfg;
  }

  NodeRecord* require(const Prefix& p) {
    NodeRecord* n = tables_.find(p);
    if (!n) throw std::logic_error("prefix " + p.to_string() + " is not stored");
    return n;
  }

  /// Inserts `p`; when its slot holds a different node idle for at least
  /// t_I, that node is invalidated first. Such a node is already dead, any
  /// packet reaching it would invalidate it, but interior nodes shadowed by
  /// their descendants may never see another packet.
  InsertStatus place(const Prefix& p, const NodeRecord& rec, Timestamp ts) {
    const InsertStatus st = tables_.insert(p, rec);
    if (st == InsertStatus::ok) return st;
    const NodeRecord* occ = tables_.occupant(p);
    if (!occ || ts < occ->ts || ts - occ->ts < cfg_.inactive_timeout) return st;
    reclaimed_volume_ += occ->sum();
    tables_.erase(Prefix{occ->key, p.len()});
    ++stats_.reclaims;
    return tables_.insert(p, rec);
  }

  void reset_root(Timestamp ts) {
    NodeRecord* root = require(Prefix::root());
    *root = NodeRecord{0, 0, ts, 0};
    ++stats_.root_resets;
  }

  void account(StepResult& r, const Prefix& p, unsigned side, std::uint64_t w) {
    NodeRecord* n = require(p);
    std::uint32_t& c = n->counter(side);
    const std::uint64_t sum = std::uint64_t{c} + w;
    c = static_cast<std::uint32_t>(std::min<std::uint64_t>(sum, std::numeric_limits<std::uint32_t>::max()));
    r.applied_to = p;
    r.applied_side = side;
    r.applied_weight = w;
  }

  void notify_change(StructureChange kind, Timestamp ts) {
    if (!change_) return;
    if (auto ev = change_->on_structure_change(kind, ts)) pending_.push_back(*ev);
  }

  TrieConfig cfg_;
  LpmTables tables_;
  std::optional<ChangeDetector> change_;
  std::vector<DetectionEvent> pending_;
  std::uint64_t reclaimed_volume_ = 0;
  TrieStats stats_;
  Timestamp last_ts_ = 0;
};

}  // namespace etrie

#endif  // ETRIE_TRIE_HPP
