#ifndef ETRIE_SPREAD_FILTER_HPP
#define ETRIE_SPREAD_FILTER_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "etrie/hash.hpp"
#include "etrie/prefix.hpp"

namespace etrie {

/// Plain Bloom filter over (source prefix, element) pairs, optionally tagged
/// with a window start.
///
/// The key is prefix value (big-endian), prefix length, element (big-endian),
/// then the 48-bit window start (big-endian) when tagged: 9 or 15 bytes.
/// Probe i is (h1 + i * h2) mod m with h1 = CRC-32 of the key and h2 =
/// FNV-1a of the key forced odd.
class BloomFilter {
 public:
  explicit BloomFilter(std::size_t m_bits, unsigned k = 4) : m_(m_bits), k_(k), words_((m_bits + 63) / 64) {
    if (m_bits == 0) throw std::invalid_argument("bloom filter needs at least one bit");
    if (k == 0) throw std::invalid_argument("bloom filter needs at least one hash function");
  }

  /// Returns true iff the pair was not already present, and sets its bits.
  bool test_and_set(const Prefix& source, std::uint32_t element) { return test_and_set(encode(source, element)); }
  bool test_and_set(const Prefix& source, Timestamp window, std::uint32_t element) {
    return test_and_set(encode(source, element, window));
  }

  bool contains(const Prefix& source, std::uint32_t element) const { return contains(encode(source, element)); }
  bool contains(const Prefix& source, Timestamp window, std::uint32_t element) const {
    return contains(encode(source, element, window));
  }

  struct Key {
    std::array<std::uint8_t, 15> bytes{};
    std::size_t size = 9;
    std::span<const std::uint8_t> view() const { return {bytes.data(), size}; }
  };

  static Key encode(const Prefix& source, std::uint32_t element, std::optional<Timestamp> window = std::nullopt) {
    Key k;
    put_be32(k.bytes.data(), source.bits());
    k.bytes[4] = static_cast<std::uint8_t>(source.len());
    put_be32(k.bytes.data() + 5, element);
    if (window) {
      for (int i = 0; i < 6; ++i) k.bytes[9 + i] = static_cast<std::uint8_t>(*window >> (8 * (5 - i)));
      k.size = 15;
    }
    return k;
  }

  bool test_and_set(const Key& key) {
    bool fresh = false;
    for_each_probe(key, [&](std::size_t bit) {
      std::uint64_t& word = words_[bit / 64];
      const std::uint64_t mask = std::uint64_t{1} << (bit % 64);
      if (!(word & mask)) {
        fresh = true;
        word |= mask;
      }
    });
    if (fresh) ++inserted_;
    return fresh;
  }

  bool contains(const Key& key) const {
    bool all = true;
    for_each_probe(key, [&](std::size_t bit) {
      if (!(words_[bit / 64] & (std::uint64_t{1} << (bit % 64)))) all = false;
    });
    return all;
  }

  void clear() {
    std::fill(words_.begin(), words_.end(), 0);
    inserted_ = 0;
  }

  /// Sets every bit; used to exercise saturation.
  void saturate() {
    std::fill(words_.begin(), words_.end(), ~std::uint64_t{0});
    if (m_ % 64) words_.back() = (std::uint64_t{1} << (m_ % 64)) - 1;
  }

  std::size_t bits() const { return m_; }
  unsigned hashes() const { return k_; }
  std::uint64_t inserted() const { return inserted_; }

  std::size_t bits_set() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  /// (bits set / m)^k: the chance that k independent probes all hit set bits.
  double estimated_fp_rate() const {
    const double fill = static_cast<double>(bits_set()) / static_cast<double>(m_);
    return std::pow(fill, static_cast<double>(k_));
  }

 private:
  template <class Fn>
  void for_each_probe(const Key& key, Fn&& fn) const {
    const std::uint64_t h1 = crc32(key.view());
    const std::uint64_t h2 = fnv1a32(key.view()) | 1u;
    for (unsigned i = 0; i < k_; ++i) fn(static_cast<std::size_t>((h1 + i * h2) % m_));
  }

  std::size_t m_;
  unsigned k_;
  std::vector<std::uint64_t> words_;
  std::uint64_t inserted_ = 0;
};

/// Distinct-pair memory for spread modes: two Bloom generations of half
/// the bit budget each. Pairs are tagged with the counting node's window
/// start, so a node window straddling a rotation still sees what it already
/// counted in the older generation. rotate() drops the older generation.
class WindowedFilter {
 public:
  explicit WindowedFilter(std::size_t m_bits, unsigned k = 4)
      : gen_{BloomFilter(std::max<std::size_t>(1, m_bits / 2), k), BloomFilter(std::max<std::size_t>(1, m_bits / 2), k)} {}

  /// True iff the pair is new for this window; either way it ends up in the
  /// current generation.
  bool test_and_set(const Prefix& source, Timestamp window, std::uint32_t element) {
    const auto key = BloomFilter::encode(source, element, window);
    const bool seen_before = gen_[1 - cur_].contains(key);
    const bool fresh = gen_[cur_].test_and_set(key);
    return fresh && !seen_before;
  }

  bool contains(const Prefix& source, Timestamp window, std::uint32_t element) const {
    const auto key = BloomFilter::encode(source, element, window);
    return gen_[0].contains(key) || gen_[1].contains(key);
  }

  void rotate() {
    cur_ = 1 - cur_;
    gen_[cur_].clear();
  }

  void clear() {
    gen_[0].clear();
    gen_[1].clear();
  }

  const BloomFilter& current() const { return gen_[cur_]; }
  const BloomFilter& previous() const { return gen_[1 - cur_]; }
  std::size_t bits() const { return gen_[0].bits() + gen_[1].bits(); }

 private:
  std::array<BloomFilter, 2> gen_;
  unsigned cur_ = 0;
};

}  // namespace etrie

#endif  // ETRIE_SPREAD_FILTER_HPP
