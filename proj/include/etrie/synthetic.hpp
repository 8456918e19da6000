#ifndef ETRIE_SYNTHETIC_HPP
#define ETRIE_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "etrie/config.hpp"
#include "etrie/prefix.hpp"
#include "etrie/traces.hpp"

namespace etrie {

/// A prefix receiving a fixed share of the packet rate, spread uniformly
/// over its addresses.
struct PlantedHeavy {
  Prefix prefix;
  double share = 0;
};

enum class AttackKind { dos, scan };

/// dos: one source to one victim at a constant rate.
/// scan: one source to a fresh random destination per packet.
struct AttackSpec {
  AttackKind kind = AttackKind::dos;
  double start_s = 0;
  double duration_s = 0;
  double rate_pps = 0;
  std::uint32_t source = 0;
  std::uint32_t victim = 0;     // dos only
  std::uint64_t dst_count = 0;  // scan: stop after this many packets, 0 = no limit
};

struct SyntheticSpec {
  double duration_s = 60;
  double rate_pps = 10'000;  // background plus planted heavies
  unsigned address_bits = 32;
  std::uint32_t sources = 10'000;
  double zipf_exponent = 1.0;
  unsigned fanout = 4;  // fixed destinations per background source
  std::vector<PlantedHeavy> heavies;
  std::vector<AttackSpec> attacks;
  std::vector<std::pair<std::uint32_t, double>> lengths{{64, 0.5}, {576, 0.2}, {1500, 0.3}};

  double planted_share() const {
    double s = 0;
    for (const auto& h : heavies) s += h.share;
    return s;
  }

  void validate() const {
    if (!(duration_s > 0)) throw ConfigError("synthetic duration must be positive");
    if (!(rate_pps > 0)) throw ConfigError("synthetic rate must be positive");
    if (address_bits < 1 || address_bits > 32) throw ConfigError("address_bits must be in 1..32");
    if (sources == 0) throw ConfigError("background needs at least one source");
    if (fanout == 0) throw ConfigError("fanout must be positive");
    if (planted_share() > 1.0 + 1e-12) throw ConfigError("planted shares sum above 1");
    for (const auto& h : heavies) {
      if (h.share < 0) throw ConfigError("planted share must be non-negative");
      if (h.prefix.len() > address_bits) throw ConfigError("planted prefix longer than the address space");
    }
    for (const auto& a : attacks)
      if (!(a.rate_pps > 0) || a.start_s < 0 || a.duration_s < 0) throw ConfigError("bad attack timing or rate");
    if (lengths.empty()) throw ConfigError("length mix must not be empty");
  }

  /// The deepest planted heavy, used as the learning-phase probe.
  std::optional<Prefix> deepest_heavy() const {
    std::optional<Prefix> best;
    for (const auto& h : heavies)
      if (!best || h.prefix.len() > best->len()) best = h.prefix;
    return best;
  }
};

namespace detail {

/// [0, 1) with 53 random bits; mt19937_64 output is fully specified, so this
/// stays reproducible across standard libraries.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::uint32_t address_in(const Prefix& p, unsigned address_bits, std::mt19937_64& rng) {
  const std::uint32_t r = static_cast<std::uint32_t>(rng() >> 32);
  return p.bits() | (r & ~prefix_mask(p.len()) & prefix_mask(address_bits));
}

}  // namespace detail

/// Lazily generates a trace: background plus planted heavies as one Poisson
/// process, attacks as constant-rate streams merged by timestamp.
/// Deterministic for a given spec and seed.
class SyntheticSource final : public PacketSource {
 public:
  SyntheticSource(SyntheticSpec spec, std::uint64_t seed) : spec_(std::move(spec)), rng_(seed) {
    spec_.validate();
    end_us_ = static_cast<Timestamp>(spec_.duration_s * 1e6);
    const Prefix space{0, 0};
    src_addr_.resize(spec_.sources);
    dst_pool_.resize(std::size_t{spec_.sources} * spec_.fanout);
    for (auto& a : src_addr_) a = detail::address_in(space, spec_.address_bits, rng_);
    for (auto& d : dst_pool_) d = static_cast<std::uint32_t>(rng_() >> 32);
    zipf_cdf_.resize(spec_.sources);
    double acc = 0;
    for (std::uint32_t i = 0; i < spec_.sources; ++i) {
      acc += 1.0 / std::pow(static_cast<double>(i + 1), spec_.zipf_exponent);
      zipf_cdf_[i] = acc;
    }
    for (auto& c : zipf_cdf_) c /= acc;
    double lacc = 0, ltotal = 0;
    for (auto& l : spec_.lengths) ltotal += l.second;
    for (auto& l : spec_.lengths) {
      lacc += l.second / ltotal;
      len_cdf_.push_back(lacc);
    }
    heavy_cdf_.clear();
    double hacc = 0;
    for (auto& h : spec_.heavies) {
      hacc += h.share;
      heavy_cdf_.push_back(hacc);
    }
    next_bg_ = exp_gap(spec_.rate_pps);
    for (const auto& a : spec_.attacks) {
      AttackState st;
      st.spec = a;
      st.rng.seed(seed ^ (0x9E3779B97F4A7C15ull * (attacks_.size() + 1)));
      st.next = a.start_s * 1e6;
      st.end = (a.start_s + a.duration_s) * 1e6;
      if (a.duration_s == 0 && a.dst_count > 0) st.end = st.next + static_cast<double>(a.dst_count) / a.rate_pps * 1e6 + 1;
      attacks_.push_back(st);
    }
  }

  std::optional<PacketRecord> next() override {
    AttackState* best = nullptr;
    for (auto& a : attacks_) {
      if (a.done()) continue;
      if (!best || a.next < best->next) best = &a;
    }
    const bool bg_live = next_bg_ < static_cast<double>(end_us_);
    if (best && (!bg_live || best->next < next_bg_) && best->next < static_cast<double>(end_us_))
      return emit_attack(*best);
    if (!bg_live) return std::nullopt;
    return emit_background();
  }

  const SyntheticSpec& spec() const { return spec_; }

 private:
  struct AttackState {
    AttackSpec spec;
    double next = 0;
    double end = 0;
    std::uint64_t sent = 0;
    std::mt19937_64 rng;
    bool done() const { return next >= end || (spec.kind == AttackKind::scan && spec.dst_count && sent >= spec.dst_count); }
  };

  double exp_gap(double rate) { return -std::log(1.0 - detail::unit(rng_)) / rate * 1e6; }

  std::uint32_t pick_length() {
    const double u = detail::unit(rng_);
    const auto it = std::upper_bound(len_cdf_.begin(), len_cdf_.end(), u);
    return spec_.lengths[std::min<std::size_t>(it - len_cdf_.begin(), spec_.lengths.size() - 1)].first;
  }

  PacketRecord emit_background() {
    PacketRecord p;
    p.ts = static_cast<Timestamp>(next_bg_);
    next_bg_ += exp_gap(spec_.rate_pps);
    const double u = detail::unit(rng_);
    const auto h = std::upper_bound(heavy_cdf_.begin(), heavy_cdf_.end(), u);
    if (h != heavy_cdf_.end()) {
      const auto& heavy = spec_.heavies[static_cast<std::size_t>(h - heavy_cdf_.begin())];
      p.src = detail::address_in(heavy.prefix, spec_.address_bits, rng_);
      p.dst = dst_pool_[static_cast<std::size_t>(rng_() % dst_pool_.size())];
    } else {
      const double z = detail::unit(rng_);
      const std::size_t rank =
          std::min<std::size_t>(std::upper_bound(zipf_cdf_.begin(), zipf_cdf_.end(), z) - zipf_cdf_.begin(),
                                spec_.sources - 1);
      p.src = src_addr_[rank];
      p.dst = dst_pool_[rank * spec_.fanout + static_cast<std::size_t>(rng_() % spec_.fanout)];
    }
    p.length = pick_length();
    return p;
  }

  PacketRecord emit_attack(AttackState& a) {
    PacketRecord p;
    p.ts = static_cast<Timestamp>(a.next);
    p.src = a.spec.source;
    p.dst = a.spec.kind == AttackKind::dos ? a.spec.victim : static_cast<std::uint32_t>(a.rng() >> 32);
    p.length = a.spec.kind == AttackKind::dos ? 1500 : 64;
    a.next += 1e6 / a.spec.rate_pps;
    ++a.sent;
    return p;
  }

  SyntheticSpec spec_;
  std::mt19937_64 rng_;
  Timestamp end_us_ = 0;
  std::vector<std::uint32_t> src_addr_;
  std::vector<std::uint32_t> dst_pool_;
  std::vector<double> zipf_cdf_;
  std::vector<double> len_cdf_;
  std::vector<double> heavy_cdf_;
  double next_bg_ = 0;
  std::vector<AttackState> attacks_;
};

inline std::vector<PacketRecord> generate(const SyntheticSpec& spec, std::uint64_t seed) {
  SyntheticSource src(spec, seed);
  return collect(src);
}

// JSON schema (all keys optional except where noted):
// {
//   "duration_s": 60, "rate_pps": 10000, "address_bits": 32,
//   "background": {"sources": 10000, "zipf": 1.0, "fanout": 4},
//   "heavies": [{"prefix": "10.1.0.0/16", "share": 0.1}],
//   "attacks": [{"kind": "dos"|"scan", "start_s": 30, "duration_s": 10, "rate_pps": 5000,
//                "source": "1.2.3.4", "victim": "5.6.7.8", "dst_count": 0}],
//   "lengths": [[64, 0.5], [576, 0.2], [1500, 0.3]]
// }
inline SyntheticSpec synthetic_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  s.duration_s = j.value("duration_s", s.duration_s);
  s.rate_pps = j.value("rate_pps", s.rate_pps);
  s.address_bits = j.value("address_bits", s.address_bits);
  if (j.contains("background")) {
    const auto& b = j.at("background");
    s.sources = b.value("sources", s.sources);
    s.zipf_exponent = b.value("zipf", s.zipf_exponent);
    s.fanout = b.value("fanout", s.fanout);
  }
  auto addr = [](const nlohmann::json& v) -> std::uint32_t {
    if (v.is_number_unsigned()) return v.get<std::uint32_t>();
    auto a = parse_ipv4(v.get<std::string>());
    if (!a) throw ConfigError("bad address '" + v.dump() + "' in synthetic spec");
    return *a;
  };
  for (const auto& h : j.value("heavies", nlohmann::json::array())) {
    auto p = Prefix::parse(h.at("prefix").get<std::string>());
    if (!p) throw ConfigError("bad planted prefix " + h.at("prefix").dump());
    s.heavies.push_back({*p, h.at("share").get<double>()});
  }
  for (const auto& a : j.value("attacks", nlohmann::json::array())) {
    AttackSpec at;
    const auto kind = a.at("kind").get<std::string>();
    if (kind == "dos") at.kind = AttackKind::dos;
    else if (kind == "scan") at.kind = AttackKind::scan;
    else throw ConfigError("attack kind must be dos or scan, got " + kind);
    at.start_s = a.value("start_s", 0.0);
    at.duration_s = a.value("duration_s", 0.0);
    at.rate_pps = a.value("rate_pps", 0.0);
    at.source = addr(a.at("source"));
    if (a.contains("victim")) at.victim = addr(a.at("victim"));
    at.dst_count = a.value("dst_count", std::uint64_t{0});
    s.attacks.push_back(at);
  }
  if (j.contains("lengths")) {
    s.lengths.clear();
    for (const auto& l : j.at("lengths")) s.lengths.emplace_back(l.at(0).get<std::uint32_t>(), l.at(1).get<double>());
  }
  s.validate();
  return s;
}

inline SyntheticSpec load_synthetic(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synthetic spec " + path);
  try {
    return synthetic_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace etrie

#endif  // ETRIE_SYNTHETIC_HPP
