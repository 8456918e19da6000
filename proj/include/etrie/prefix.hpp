#ifndef ETRIE_PREFIX_HPP
#define ETRIE_PREFIX_HPP

#include <charconv>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace etrie {

/// Microseconds since the start of a trace. Only the low 48 bits are
/// meaningful, matching the width of the node timestamp register.
using Timestamp = std::uint64_t;
using Duration = std::uint64_t;

inline constexpr unsigned kTimestampBits = 48;
inline constexpr Timestamp kTimestampMax = (Timestamp{1} << kTimestampBits) - 1;

inline constexpr unsigned kMaxPrefixLen = 32;
inline constexpr unsigned kLevels = kMaxPrefixLen + 1;

inline constexpr Duration kMicrosPerSecond = 1'000'000;

constexpr Duration seconds(double s) { return static_cast<Duration>(s * 1e6 + 0.5); }

constexpr std::uint32_t prefix_mask(unsigned len) {
  return len == 0 ? 0u : ~std::uint32_t{0} << (kMaxPrefixLen - len);
}

/// Bit of `key` at position `pos`, counted from the most significant bit.
/// Position 32 (one past a full address) reads as 0.
constexpr unsigned key_bit(std::uint32_t key, unsigned pos) {
  return pos >= kMaxPrefixLen ? 0u : (key >> (kMaxPrefixLen - 1 - pos)) & 1u;
}

inline std::string format_ipv4(std::uint32_t addr);
inline std::optional<std::uint32_t> parse_ipv4(std::string_view text);

/// A left-aligned flow-key prefix. Value bits below the prefix length are
/// always zero; length 0 is the root prefix `*`.
class Prefix {
 public:
  constexpr Prefix() = default;

  constexpr Prefix(std::uint32_t bits, unsigned len)
      : bits_(bits & prefix_mask(len > kMaxPrefixLen ? 0 : len)), len_(len) {
    if (len > kMaxPrefixLen) throw std::invalid_argument("prefix length above 32");
  }

  static constexpr Prefix root() { return {}; }

  constexpr std::uint32_t bits() const { return bits_; }
  constexpr unsigned len() const { return len_; }
  constexpr bool is_root() const { return len_ == 0; }

  constexpr bool contains(std::uint32_t key) const {
    return (key & prefix_mask(len_)) == bits_;
  }

  /// True when `other` equals this prefix or lies below it.
  constexpr bool covers(const Prefix& other) const {
    return other.len_ >= len_ && contains(other.bits_);
  }

  constexpr Prefix child(unsigned side) const {
    if (len_ >= kMaxPrefixLen) throw std::logic_error("full-length prefix has no child");
    const std::uint32_t bit = side ? (std::uint32_t{1} << (kMaxPrefixLen - 1 - len_)) : 0u;
    return {bits_ | bit, len_ + 1};
  }

  constexpr Prefix parent() const {
    if (len_ == 0) throw std::logic_error("root prefix has no parent");
    return {bits_, len_ - 1};
  }

  constexpr Prefix truncate(unsigned len) const { return {bits_, len < len_ ? len : len_}; }

  /// Which child counter of this prefix a key falls under.
  constexpr unsigned side_of(std::uint32_t key) const { return key_bit(key, len_); }

  /// Dotted-quad form, e.g. `10.0.0.0/8`.
  std::string to_string() const { return format_ipv4(bits_) + "/" + std::to_string(len_); }

  /// Bit-string form for small address spaces, e.g. `01*` for width 3.
  std::string to_bit_string(unsigned width) const {
    std::string out;
    for (unsigned i = 0; i < width; ++i) out += i < len_ ? char('0' + key_bit(bits_, i)) : '*';
    return out;
  }

  static std::optional<Prefix> parse(std::string_view text);
  static std::optional<Prefix> parse_bits(std::string_view text);

  friend constexpr auto operator<=>(const Prefix&, const Prefix&) = default;

 private:
  std::uint32_t bits_ = 0;
  unsigned len_ = 0;
};

inline std::string format_ipv4(std::uint32_t addr) {
  return std::to_string(addr >> 24) + '.' + std::to_string((addr >> 16) & 0xff) + '.' +
         std::to_string((addr >> 8) & 0xff) + '.' + std::to_string(addr & 0xff);
}

/// Accepts dotted quads or a plain unsigned integer.
inline std::optional<std::uint32_t> parse_ipv4(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.find('.') == std::string_view::npos) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size() || v > 0xffffffffull) return std::nullopt;
    return static_cast<std::uint32_t>(v);
  }
  std::uint32_t addr = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    unsigned v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || next == p || v > 255) return std::nullopt;
    addr = (addr << 8) | v;
    p = next;
    if (octet < 3) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return addr;
}

inline std::optional<Prefix> Prefix::parse(std::string_view text) {
  const auto slash = text.find('/');
  auto addr = parse_ipv4(text.substr(0, slash));
  if (!addr) return std::nullopt;
  unsigned len = kMaxPrefixLen;
  if (slash != std::string_view::npos) {
    auto tail = text.substr(slash + 1);
    auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), len);
    if (ec != std::errc{} || p != tail.data() + tail.size() || len > kMaxPrefixLen) return std::nullopt;
  }
  if ((*addr & ~prefix_mask(len)) != 0) return std::nullopt;
  return Prefix{*addr, len};
}

/// Parses `01*`-style strings; the prefix length is the count of leading
/// binary digits and everything after the first `*` must also be `*`.
inline std::optional<Prefix> Prefix::parse_bits(std::string_view text) {
  if (text.size() > kMaxPrefixLen) return std::nullopt;
  std::uint32_t bits = 0;
  unsigned len = 0;
  bool wild = false;
  for (char c : text) {
    if (c == '*') {
      wild = true;
    } else if ((c == '0' || c == '1') && !wild) {
      if (c == '1') bits |= std::uint32_t{1} << (kMaxPrefixLen - 1 - len);
      ++len;
    } else {
      return std::nullopt;
    }
  }
  return Prefix{bits, len};
}

}  // namespace etrie

template <>
struct std::hash<etrie::Prefix> {
  std::size_t operator()(const etrie::Prefix& p) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t{p.bits()} << 6) | p.len());
  }
};

#endif  // ETRIE_PREFIX_HPP
