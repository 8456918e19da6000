#ifndef ETRIE_LPM_STAGE_HPP
#define ETRIE_LPM_STAGE_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "etrie/hash.hpp"
#include "etrie/prefix.hpp"

namespace etrie {

/// Per-node state: two child counters, a 48-bit timestamp and the stored
/// flow-key prefix used to detect hash collisions.
struct NodeRecord {
  std::uint32_t c0 = 0;
  std::uint32_t c1 = 0;
  Timestamp ts = 0;
  std::uint32_t key = 0;

  std::uint32_t& counter(unsigned side) { return side ? c1 : c0; }
  std::uint32_t counter(unsigned side) const { return side ? c1 : c0; }
  std::uint64_t sum() const { return std::uint64_t{c0} + c1; }

  friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

/// 112 bits of node state plus 32 bits of stored key.
inline constexpr std::uint64_t kNodeBits = 144;

enum class HashKind {
  identity,  // direct index by prefix value, table holds every prefix of its length
  crc32,     // CRC-32 slot, single access, no probing
  exact      // collision-free map; models unlimited memory
};

enum class InsertStatus { ok, table_full };
enum class EraseStatus { ok, not_found };

/// One register array per prefix length.
class LevelTable {
 public:
  LevelTable() = default;

  LevelTable(unsigned level, HashKind kind, std::size_t capacity) : level_(level), kind_(kind) {
    if (level > kMaxPrefixLen) throw std::invalid_argument("table level above 32");
    if (kind == HashKind::identity) capacity = std::size_t{1} << level;
    if (kind != HashKind::exact) slots_.resize(capacity);
  }

  unsigned level() const { return level_; }
  HashKind kind() const { return kind_; }
  std::size_t size() const { return size_; }

  /// Slot count; 0 for exact tables, which are unbounded.
  std::size_t capacity() const { return slots_.size(); }

  std::size_t slot_of(std::uint32_t bits) const {
    switch (kind_) {
      case HashKind::identity:
        return level_ == 0 ? 0 : bits >> (kMaxPrefixLen - level_);
      case HashKind::crc32:
        return prefix_hash(bits & prefix_mask(level_), level_) % slots_.size();
      case HashKind::exact:
        break;
    }
    return 0;
  }

  NodeRecord* find(std::uint32_t bits) {
    return const_cast<NodeRecord*>(std::as_const(*this).find(bits));
  }

  const NodeRecord* find(std::uint32_t bits) const {
    bits &= prefix_mask(level_);
    if (kind_ == HashKind::exact) {
      auto it = map_.find(bits);
      return it == map_.end() ? nullptr : &it->second;
    }
    if (slots_.empty()) return nullptr;
    const Slot& s = slots_[slot_of(bits)];
    return s.used && s.rec.key == bits ? &s.rec : nullptr;
  }

  /// Whatever record sits in the slot for `bits`, matching or not. Null for
  /// exact tables and empty slots.
  const NodeRecord* occupant(std::uint32_t bits) const {
    if (kind_ == HashKind::exact || slots_.empty()) return nullptr;
    const Slot& s = slots_[slot_of(bits & prefix_mask(level_))];
    return s.used ? &s.rec : nullptr;
  }

  /// True when the slot for `bits` holds a different key.
  bool collides(std::uint32_t bits) const {
    bits &= prefix_mask(level_);
    if (kind_ == HashKind::exact || slots_.empty()) return false;
    const Slot& s = slots_[slot_of(bits)];
    return s.used && s.rec.key != bits;
  }

  InsertStatus insert(std::uint32_t bits, NodeRecord rec) {
    bits &= prefix_mask(level_);
    rec.key = bits;
    if (kind_ == HashKind::exact) {
      auto [it, inserted] = map_.insert_or_assign(bits, rec);
      if (inserted) ++size_;
      return InsertStatus::ok;
    }
    if (slots_.empty()) return InsertStatus::table_full;
    Slot& s = slots_[slot_of(bits)];
    if (s.used && s.rec.key != bits) return InsertStatus::table_full;
    if (!s.used) ++size_;
    s.used = true;
    s.rec = rec;
    return InsertStatus::ok;
  }

  EraseStatus erase(std::uint32_t bits) {
    bits &= prefix_mask(level_);
    if (kind_ == HashKind::exact) {
      if (map_.erase(bits) == 0) return EraseStatus::not_found;
      --size_;
      return EraseStatus::ok;
    }
    if (slots_.empty()) return EraseStatus::not_found;
    Slot& s = slots_[slot_of(bits)];
    if (!s.used || s.rec.key != bits) return EraseStatus::not_found;
    s.used = false;
    s.rec = {};
    --size_;
    return EraseStatus::ok;
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    if (kind_ == HashKind::exact) {
      for (const auto& [bits, rec] : map_) fn(Prefix{bits, level_}, rec);
      return;
    }
    for (const Slot& s : slots_)
      if (s.used) fn(Prefix{s.rec.key, level_}, s.rec);
  }

  void clear() {
    map_.clear();
    std::fill(slots_.begin(), slots_.end(), Slot{});
    size_ = 0;
  }

 private:
  struct Slot {
    bool used = false;
    NodeRecord rec{};
  };

  unsigned level_ = 0;
  HashKind kind_ = HashKind::crc32;
  std::vector<Slot> slots_;
  std::unordered_map<std::uint32_t, NodeRecord> map_;
  std::size_t size_ = 0;
};

/// Memory split across the 33 prefix-length tables. Capacity of a level is
/// floor(per_level_bits / 144).
struct MemoryBudget {
  std::uint64_t total_bits = 0;
  std::array<std::uint64_t, kLevels> per_level_bits{};
  bool unbounded = false;

  std::size_t capacity(unsigned level) const { return per_level_bits[level] / kNodeBits; }

  std::uint64_t allocated_bits() const {
    std::uint64_t s = 0;
    for (auto b : per_level_bits) s += b;
    return s;
  }

  static MemoryBudget unlimited() {
    MemoryBudget b;
    b.unbounded = true;
    b.total_bits = std::numeric_limits<std::uint64_t>::max();
    return b;
  }

  static MemoryBudget from_bytes(std::uint64_t bytes, unsigned max_depth = kMaxPrefixLen);
};

/// Water-filling split: every level up to `max_depth` gets min(2^level, w)
/// slots for the largest w that fits, leftover slots go one each to the
/// shallowest levels still below 2^level. Levels whose share reaches
/// 2^level become full identity tables. Capacity per level never decreases
/// as the budget grows.
inline MemoryBudget default_budget(std::uint64_t total_bits, unsigned max_depth = kMaxPrefixLen) {
  if (max_depth == 0 || max_depth > kMaxPrefixLen) throw std::invalid_argument("max_depth must be in 1..32");
  const std::uint64_t slots = total_bits / kNodeBits;
  if (slots < 1) throw std::invalid_argument("memory budget smaller than one node");

  auto full = [](unsigned level) { return std::uint64_t{1} << level; };
  auto used_at = [&](std::uint64_t w) {
    std::uint64_t s = 0;
    for (unsigned l = 0; l <= max_depth; ++l) s += std::min(full(l), w);
    return s;
  };
  std::uint64_t lo = 0, hi = full(max_depth);
  while (lo < hi) {
    std::uint64_t mid = lo + (hi - lo + 1) / 2;
    if (used_at(mid) <= slots) lo = mid; else hi = mid - 1;
  }
  const std::uint64_t w = lo;
  std::array<std::uint64_t, kLevels> cap{};
  for (unsigned l = 0; l <= max_depth; ++l) cap[l] = std::min(full(l), w);
  std::uint64_t spare = slots >= used_at(w) ? slots - used_at(w) : 0;
  for (unsigned l = 0; l <= max_depth && spare > 0; ++l) {
    if (cap[l] < full(l)) {
      ++cap[l];
      --spare;
    }
  }

  MemoryBudget b;
  b.total_bits = total_bits;
  for (unsigned l = 0; l <= max_depth; ++l) b.per_level_bits[l] = cap[l] * kNodeBits;
  return b;
}

inline MemoryBudget MemoryBudget::from_bytes(std::uint64_t bytes, unsigned max_depth) {
  return default_budget(bytes * 8, max_depth);
}

struct LpmMatch {
  Prefix prefix;
  NodeRecord* node = nullptr;
  std::uint64_t hit_vector = 0;  // bit l set when level l matched
};

/// Parallel per-length lookup with priority selection of the longest hit.
class LpmTables {
 public:
  LpmTables() = default;

  LpmTables(const MemoryBudget& budget, unsigned max_depth) : max_depth_(max_depth) {
    if (max_depth == 0 || max_depth > kMaxPrefixLen) throw std::invalid_argument("max_depth must be in 1..32");
    for (unsigned l = 0; l <= max_depth; ++l) {
      if (budget.unbounded) {
        tables_[l] = LevelTable(l, l == 0 ? HashKind::identity : HashKind::exact, 0);
        continue;
      }
      const std::size_t cap = budget.capacity(l);
      if (l == 0 && cap < 1) throw std::invalid_argument("budget leaves no room for the root node");
      const bool full = l < 63 && cap >= (std::size_t{1} << l);
      tables_[l] = LevelTable(l, full ? HashKind::identity : HashKind::crc32, cap);
    }
  }

  unsigned max_depth() const { return max_depth_; }
  const LevelTable& level(unsigned l) const { return tables_[l]; }

  LpmMatch lookup(std::uint32_t key) {
    LpmMatch m;
    for (unsigned l = 0; l <= max_depth_; ++l)
      if (tables_[l].find(key) != nullptr) m.hit_vector |= std::uint64_t{1} << l;
    if (m.hit_vector == 0) return m;
    const unsigned best = 63 - static_cast<unsigned>(std::countl_zero(m.hit_vector));
    m.prefix = Prefix{key, best};
    m.node = tables_[best].find(key);
    return m;
  }

  NodeRecord* find(const Prefix& p) { return p.len() > max_depth_ ? nullptr : tables_[p.len()].find(p.bits()); }
  const NodeRecord* find(const Prefix& p) const {
    return p.len() > max_depth_ ? nullptr : tables_[p.len()].find(p.bits());
  }

  const NodeRecord* occupant(const Prefix& p) const {
    return p.len() > max_depth_ ? nullptr : tables_[p.len()].occupant(p.bits());
  }

  InsertStatus insert(const Prefix& p, const NodeRecord& rec) {
    if (p.len() > max_depth_) return InsertStatus::table_full;
    return tables_[p.len()].insert(p.bits(), rec);
  }

  EraseStatus erase(const Prefix& p) {
    if (p.len() > max_depth_) return EraseStatus::not_found;
    return tables_[p.len()].erase(p.bits());
  }

  std::size_t node_count() const {
    std::size_t n = 0;
    for (unsigned l = 0; l <= max_depth_; ++l) n += tables_[l].size();
    return n;
  }

  std::uint64_t bits_in_use() const { return node_count() * kNodeBits; }

  /// Longest stored prefix length.
  unsigned depth() const {
    for (unsigned l = max_depth_ + 1; l-- > 0;)
      if (tables_[l].size() > 0) return l;
    return 0;
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (unsigned l = 0; l <= max_depth_; ++l) tables_[l].for_each(fn);
  }

 private:
  std::array<LevelTable, kLevels> tables_{};
  unsigned max_depth_ = kMaxPrefixLen;
};

}  // namespace etrie

#endif  // ETRIE_LPM_STAGE_HPP
