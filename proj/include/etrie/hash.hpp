#ifndef ETRIE_HASH_HPP
#define ETRIE_HASH_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace etrie {

// CRC-32 (IEEE 802.3): reflected polynomial 0xEDB88320, init 0xFFFFFFFF,
// final xor 0xFFFFFFFF. crc32("123456789") == 0xCBF43926.
namespace detail {

constexpr std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

inline constexpr auto kCrcTable = make_crc_table();

}  // namespace detail

constexpr std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t init = 0xFFFFFFFFu) {
  std::uint32_t c = init;
  for (std::uint8_t b : bytes) c = detail::kCrcTable[(c ^ b) & 0xffu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

constexpr std::uint32_t fnv1a32(std::span<const std::uint8_t> bytes) {
  std::uint32_t h = 2166136261u;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 16777619u;
  }
  return h;
}

constexpr void put_be32(std::uint8_t* out, std::uint32_t v) {
  out[0] = static_cast<std::uint8_t>(v >> 24);
  out[1] = static_cast<std::uint8_t>(v >> 16);
  out[2] = static_cast<std::uint8_t>(v >> 8);
  out[3] = static_cast<std::uint8_t>(v);
}

/// Slot hash for a prefix table: CRC-32 over the big-endian prefix value
/// followed by one byte of prefix length.
constexpr std::uint32_t prefix_hash(std::uint32_t bits, unsigned len) {
  std::array<std::uint8_t, 5> buf{};
  put_be32(buf.data(), bits);
  buf[4] = static_cast<std::uint8_t>(len);
  return crc32(buf);
}

}  // namespace etrie

#endif  // ETRIE_HASH_HPP
