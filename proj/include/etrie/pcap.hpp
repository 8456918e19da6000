#ifndef ETRIE_PCAP_HPP
#define ETRIE_PCAP_HPP

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "etrie/traces.hpp"

namespace etrie {

// Classic libpcap capture files (microsecond or nanosecond magic, either
// byte order). Link types: Ethernet (with 802.1Q/802.1ad tags), raw IP,
// raw IPv4 and Linux cooked capture.

inline constexpr std::uint32_t kLinkEthernet = 1;
inline constexpr std::uint32_t kLinkRaw = 101;
inline constexpr std::uint32_t kLinkLinuxSll = 113;
inline constexpr std::uint32_t kLinkIpv4 = 228;

struct PcapStats {
  std::uint64_t frames = 0;
  std::uint64_t ipv4 = 0;
  std::uint64_t skipped_non_ipv4 = 0;
  bool truncated = false;
  std::vector<std::string> warnings;
};

class PcapReader final : public PacketSource {
 public:
  explicit PcapReader(std::istream& in, std::string name = "<pcap>") : in_(&in), name_(std::move(name)) {
    std::array<std::uint8_t, 24> hdr{};
    if (!read_exact(hdr.data(), hdr.size())) throw TraceError(name_ + ": file too short for a pcap header");
    const std::uint32_t magic_le = load32(hdr.data(), false);
    if (magic_le == 0xa1b2c3d4u || magic_le == 0xa1b23c4du) {
      swapped_ = false;
    } else if (load32(hdr.data(), true) == 0xa1b2c3d4u || load32(hdr.data(), true) == 0xa1b23c4du) {
      swapped_ = true;
    } else {
      throw TraceError(name_ + ": not a pcap file (bad magic)");
    }
    nanos_ = load32(hdr.data(), swapped_) == 0xa1b23c4du;
    linktype_ = load32(hdr.data() + 20, swapped_);
    if (linktype_ != kLinkEthernet && linktype_ != kLinkRaw && linktype_ != kLinkLinuxSll && linktype_ != kLinkIpv4)
      throw TraceError(name_ + ": unsupported link type " + std::to_string(linktype_));
  }

  std::optional<PacketRecord> next() override {
    while (!done_) {
      std::array<std::uint8_t, 16> rh{};
      const std::size_t got = read_some(rh.data(), rh.size());
      if (got == 0) {
        done_ = true;
        break;
      }
      if (got < rh.size()) {
        truncate("truncated record header");
        break;
      }
      const std::uint64_t sec = load32(rh.data(), swapped_);
      const std::uint64_t frac = load32(rh.data() + 4, swapped_);
      const std::uint32_t incl = load32(rh.data() + 8, swapped_);
      if (incl > (1u << 26)) throw TraceError(name_ + ": implausible record length " + std::to_string(incl));
      frame_.resize(incl);
      if (read_some(frame_.data(), incl) < incl) {
        truncate("truncated final record");
        break;
      }
      ++stats_.frames;
      const std::uint64_t us = sec * 1'000'000 + (nanos_ ? frac / 1000 : frac);
      auto rec = decode(frame_);
      if (!rec) {
        ++stats_.skipped_non_ipv4;
        continue;
      }
      if (!have_base_) {
        base_ = us;
        have_base_ = true;
      }
      rec->ts = us >= base_ ? us - base_ : 0;
      ++stats_.ipv4;
      return rec;
    }
    return std::nullopt;
  }

  const PcapStats& stats() const { return stats_; }
  std::uint32_t linktype() const { return linktype_; }

 private:
  static std::uint32_t load32(const std::uint8_t* p, bool big) {
    return big ? (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3]
               : (std::uint32_t{p[3]} << 24) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[1]} << 8) | p[0];
  }
  static std::uint16_t be16(const std::uint8_t* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }

  bool read_exact(std::uint8_t* p, std::size_t n) { return read_some(p, n) == n; }
  std::size_t read_some(std::uint8_t* p, std::size_t n) {
    in_->read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in_->gcount());
  }

  void truncate(const std::string& what) {
    stats_.truncated = true;
    stats_.warnings.push_back(name_ + ": " + what + ", stopping");
    done_ = true;
  }

  std::optional<PacketRecord> decode(std::span<const std::uint8_t> f) const {
    std::size_t off = 0;
    if (linktype_ == kLinkEthernet) {
      if (f.size() < 14) return std::nullopt;
      std::uint16_t type = be16(&f[12]);
      off = 14;
      while ((type == 0x8100 || type == 0x88a8) && f.size() >= off + 4) {
        type = be16(&f[off + 2]);
        off += 4;
      }
      if (type != 0x0800) return std::nullopt;
    } else if (linktype_ == kLinkLinuxSll) {
      if (f.size() < 16 || be16(&f[14]) != 0x0800) return std::nullopt;
      off = 16;
    }
    if (f.size() < off + 20) return std::nullopt;
    const std::uint8_t* ip = &f[off];
    if ((ip[0] >> 4) != 4 || (ip[0] & 0x0f) < 5) return std::nullopt;
    PacketRecord r;
    r.length = be16(ip + 2);
    r.src = load32(ip + 12, true);
    r.dst = load32(ip + 16, true);
    return r;
  }

  std::istream* in_;
  std::string name_;
  bool swapped_ = false;
  bool nanos_ = false;
  std::uint32_t linktype_ = kLinkEthernet;
  bool done_ = false;
  bool have_base_ = false;
  std::uint64_t base_ = 0;
  std::vector<std::uint8_t> frame_;
  PcapStats stats_;
};

/// Writes little-endian microsecond pcap files with Ethernet framing.
class PcapWriter {
 public:
  explicit PcapWriter(std::ostream& out, std::uint32_t linktype = kLinkEthernet) : out_(&out) {
    std::array<std::uint8_t, 24> h{};
    store32(h.data(), 0xa1b2c3d4u);
    h[4] = 2;  // version 2.4
    h[6] = 4;
    store32(h.data() + 16, 65535);
    store32(h.data() + 20, linktype);
    out_->write(reinterpret_cast<const char*>(h.data()), h.size());
  }

  void write_frame(Timestamp ts_us, std::span<const std::uint8_t> frame) {
    std::array<std::uint8_t, 16> r{};
    store32(r.data(), static_cast<std::uint32_t>(ts_us / 1'000'000));
    store32(r.data() + 4, static_cast<std::uint32_t>(ts_us % 1'000'000));
    store32(r.data() + 8, static_cast<std::uint32_t>(frame.size()));
    store32(r.data() + 12, static_cast<std::uint32_t>(frame.size()));
    out_->write(reinterpret_cast<const char*>(r.data()), r.size());
    out_->write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
  }

  /// Ethernet + minimal IPv4 header, no payload bytes captured.
  void write_ipv4(const PacketRecord& p) {
    std::array<std::uint8_t, 34> f{};
    f[12] = 0x08;
    std::uint8_t* ip = f.data() + 14;
    ip[0] = 0x45;
    ip[2] = static_cast<std::uint8_t>(p.length >> 8);
    ip[3] = static_cast<std::uint8_t>(p.length);
    ip[8] = 64;
    ip[9] = 17;
    put_be(ip + 12, p.src);
    put_be(ip + 16, p.dst);
    write_frame(p.ts, f);
  }

  /// A 42-byte ARP request frame.
  void write_arp(Timestamp ts_us) {
    std::array<std::uint8_t, 42> f{};
    std::memset(f.data(), 0xff, 6);
    f[12] = 0x08;
    f[13] = 0x06;
    write_frame(ts_us, f);
  }

 private:
  static void store32(std::uint8_t* p, std::uint32_t v) {
    p[0] = static_cast<std::uint8_t>(v);
    p[1] = static_cast<std::uint8_t>(v >> 8);
    p[2] = static_cast<std::uint8_t>(v >> 16);
    p[3] = static_cast<std::uint8_t>(v >> 24);
  }
  static void put_be(std::uint8_t* p, std::uint32_t v) {
    p[0] = static_cast<std::uint8_t>(v >> 24);
    p[1] = static_cast<std::uint8_t>(v >> 16);
    p[2] = static_cast<std::uint8_t>(v >> 8);
    p[3] = static_cast<std::uint8_t>(v);
  }

  std::ostream* out_;
};

inline std::vector<PacketRecord> read_pcap(std::istream& in, PcapStats* stats = nullptr,
                                           std::string name = "<pcap>") {
  PcapReader r(in, std::move(name));
  auto out = collect(r);
  if (stats) *stats = r.stats();
  return out;
}

inline std::vector<PacketRecord> read_pcap(const std::string& path, PcapStats* stats = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError("cannot open " + path);
  return read_pcap(in, stats, path);
}

inline void write_pcap(const std::string& path, const std::vector<PacketRecord>& packets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TraceError("cannot open " + path + " for writing");
  PcapWriter w(out);
  for (const auto& p : packets) w.write_ipv4(p);
}

}  // namespace etrie

#endif  // ETRIE_PCAP_HPP
