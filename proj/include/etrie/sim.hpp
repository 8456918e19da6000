#ifndef ETRIE_SIM_HPP
#define ETRIE_SIM_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "etrie/config.hpp"
#include "etrie/detector.hpp"
#include "etrie/notify.hpp"
#include "etrie/oracle.hpp"
#include "etrie/pcap.hpp"
#include "etrie/synthetic.hpp"
#include "etrie/traces.hpp"

namespace etrie {

/// "5%" (of the nominal per-window volume) or an absolute count "1000".
struct ThresholdSpec {
  bool percent = true;
  double value = 5;

  static ThresholdSpec parse(std::string_view s) {
    ThresholdSpec t;
    t.percent = !s.empty() && s.back() == '%';
    if (t.percent) s.remove_suffix(1);
    std::string tmp(s);
    std::size_t used = 0;
    try {
      t.value = std::stod(tmp, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tmp.size() || !(t.value > 0) || !std::isfinite(t.value))
      throw ConfigError("threshold must be a positive number or percentage, got '" + std::string(s) + "'");
    if (t.percent && t.value > 100) throw ConfigError("percent threshold above 100%");
    return t;
  }

  std::string to_string() const {
    std::ostringstream o;
    o << value;
    if (percent) o << '%';
    return o.str();
  }
};

/// Parses "8192", "8KB", "8K", "1MB", "512B". KB is 1024 bytes.
inline std::uint64_t parse_byte_size(std::string_view s) {
  std::string t(s);
  std::uint64_t mult = 1;
  auto strip = [&](std::string_view suf, std::uint64_t m) {
    if (t.size() > suf.size() && t.compare(t.size() - suf.size(), suf.size(), suf) == 0) {
      t.resize(t.size() - suf.size());
      mult = m;
      return true;
    }
    return false;
  };
  strip("KB", 1024) || strip("K", 1024) || strip("MB", 1024 * 1024) || strip("M", 1024 * 1024) || strip("B", 1);
  auto v = detail::parse_uint<std::uint64_t>(t);
  if (!v || *v == 0) throw ConfigError("bad byte size '" + std::string(s) + "'");
  return *v * mult;
}

struct RunConfig {
  Mode mode = Mode::hhh;
  CountMode count_mode = CountMode::packets;
  std::optional<std::uint64_t> memory_bytes;  // unset: unbounded, collision-free tables
  std::uint64_t filter_bytes = 32 * 1024;
  unsigned filter_hashes = 4;
  ThresholdSpec threshold;
  double active_timeout_s = 20;
  double inactive_timeout_s = 300;
  TimeoutPolicy timeout_fn;
  unsigned max_depth = kMaxPrefixLen;
  std::vector<unsigned> relax{0, 2};

  std::string trace_path;      // .pcap/.cap read as pcap, anything else as CSV
  bool allow_reorder = false;  // CSV only
  std::string synthetic_path;  // JSON spec
  std::optional<SyntheticSpec> synthetic;
  std::uint64_t seed = 1;

  // Volume per second behind percent thresholds. Unset: the synthetic
  // spec's rate, or the trace's measured average.
  std::optional<double> nominal_rate;

  std::int64_t change_threshold = 50;
  std::optional<double> change_window_s;  // unset: the base active timeout
  std::optional<double> change_tick_s;    // unset: min(1 s, window)
  std::size_t queue_capacity = 4096;
  unsigned warmup_windows = 0;  // leading truth windows left out of the scores
  double series_tick_s = 0;     // 0: the change detector tick
  std::optional<Prefix> target;  // learning probe; default the deepest planted heavy
  bool report_hh_on_expand = false;

  std::string events_out;
  std::string report_dir;

  Duration active_timeout() const { return seconds(active_timeout_s); }
  Duration inactive_timeout() const { return seconds(inactive_timeout_s); }
  ChangeConfig change() const {
    ChangeConfig c;
    c.alarm_threshold = change_threshold;
    c.window = change_window_s ? seconds(*change_window_s) : active_timeout();
    c.tick = change_tick_s ? seconds(*change_tick_s) : std::min<Duration>(kMicrosPerSecond, c.window);
    return c;
  }
  Duration series_tick() const { return series_tick_s > 0 ? seconds(series_tick_s) : change().tick; }

  void validate() const {
    if (!(active_timeout_s > 0) || seconds(active_timeout_s) == 0) throw ConfigError("active timeout must be positive");
    if (!(inactive_timeout_s > 0)) throw ConfigError("inactive timeout must be positive");
    if (active_timeout_s > inactive_timeout_s) throw ConfigError("active timeout exceeds the inactive timeout");
    if (max_depth < 1 || max_depth > kMaxPrefixLen) throw ConfigError("max depth must be in 1..32");
    if (relax.empty()) throw ConfigError("at least one relaxation level is required");
    for (unsigned r : relax)
      if (r > max_depth) throw ConfigError("relaxation of " + std::to_string(r) + " bits exceeds the depth");
    if (memory_bytes && *memory_bytes == 0) throw ConfigError("memory budget must be positive");
    if (mode != Mode::hhh && filter_bytes == 0) throw ConfigError("filter size must be positive");
    if (filter_hashes == 0) throw ConfigError("filter needs at least one hash");
    if (mode != Mode::hhh && threshold.percent)
      throw ConfigError("spread modes count distinct flows; give an absolute threshold");
    if (mode != Mode::hhh && count_mode == CountMode::bytes)
      throw ConfigError("byte counting applies to hhh mode only");
    if (nominal_rate && !(*nominal_rate > 0)) throw ConfigError("nominal rate must be positive");
    if (queue_capacity == 0) throw ConfigError("digest queue capacity must be positive");
    const int sources = (!trace_path.empty()) + (!synthetic_path.empty()) + synthetic.has_value();
    if (sources != 1) throw ConfigError("exactly one of a trace file or a synthetic spec is required");
    if (target && target->len() > max_depth) throw ConfigError("target prefix is deeper than max depth");
    change().validate();
  }
};

struct SeriesPoint {
  Timestamp ts = 0;
  unsigned depth = 0;
  std::size_t nodes = 0;
  std::uint64_t bits_in_use = 0;
  double change_average = 0;
};

struct WindowScore {
  std::size_t window = 0;
  unsigned relax = 0;
  Score score;
};

struct RelaxSummary {
  unsigned relax = 0;
  double recall = 1;
  double precision = 1;
  std::size_t windows = 0;
};

struct RunReport {
  RunConfig config;
  TrieConfig trie;
  double base_rate = 0;  // volume/s behind percent thresholds
  std::uint64_t truth_threshold = 0;
  std::uint64_t packets = 0;
  Timestamp trace_end = 0;
  std::size_t windows = 0;
  std::vector<Digest> digests;
  std::uint64_t dropped = 0;
  std::vector<WindowScore> scores;
  std::vector<RelaxSummary> summary;
  std::vector<SeriesPoint> series;
  TrieStats stats;
  std::uint64_t change_alarms = 0;
  std::optional<Prefix> target;
  std::optional<Timestamp> first_target_report;
  std::optional<std::uint64_t> first_target_window;

  const RelaxSummary* at_relax(unsigned r) const {
    for (const auto& s : summary)
      if (s.relax == r) return &s;
    return nullptr;
  }
};

inline std::vector<PacketRecord> load_packets(const RunConfig& cfg) {
  if (!cfg.trace_path.empty()) {
    const auto ext = std::filesystem::path(cfg.trace_path).extension().string();
    if (ext == ".pcap" || ext == ".cap") return read_pcap(cfg.trace_path);
    return read_csv(cfg.trace_path, CsvOptions{cfg.allow_reorder});
  }
  const SyntheticSpec spec = cfg.synthetic ? *cfg.synthetic : load_synthetic(cfg.synthetic_path);
  return generate(spec, cfg.seed);
}

namespace detail {

inline std::uint64_t volume_of(const PacketRecord& p, CountMode m) { return m == CountMode::bytes ? p.length : 1; }

inline double resolve_rate(const RunConfig& cfg, std::span<const PacketRecord> packets) {
  if (cfg.nominal_rate) return *cfg.nominal_rate;
  std::optional<SyntheticSpec> spec = cfg.synthetic;
  if (!spec && !cfg.synthetic_path.empty()) spec = load_synthetic(cfg.synthetic_path);
  if (spec && cfg.count_mode == CountMode::packets) return spec->rate_pps;
  if (packets.size() < 2 || packets.back().ts == packets.front().ts)
    throw ConfigError("cannot measure a rate for a percent threshold from this trace; set a nominal rate");
  std::uint64_t vol = 0;
  for (const auto& p : packets) vol += volume_of(p, cfg.count_mode);
  return static_cast<double>(vol) / (static_cast<double>(packets.back().ts - packets.front().ts) / 1e6);
}

inline std::optional<Prefix> resolve_target(const RunConfig& cfg) {
  if (cfg.target) return cfg.target;
  std::optional<SyntheticSpec> spec = cfg.synthetic;
  if (!spec && !cfg.synthetic_path.empty()) spec = load_synthetic(cfg.synthetic_path);
  if (spec) {
    auto h = spec->deepest_heavy();
    if (h && h->len() <= cfg.max_depth) return h;
  }
  return std::nullopt;
}

}  // namespace detail

/// Replays `packets` through one detector, collects digests, and scores the
/// reports against exact per-window truth. Writes the event log when
/// configured; everything else stays in the returned report.
inline RunReport run(const RunConfig& cfg, std::span<const PacketRecord> packets) {
  cfg.validate();
  RunReport rep;
  rep.config = cfg;
  rep.target = detail::resolve_target(cfg);
  const Duration base = cfg.active_timeout();

  if (cfg.threshold.percent) {
    rep.base_rate = detail::resolve_rate(cfg, packets);
    const double frac = cfg.threshold.value / 100.0;
    rep.trie = TrieConfig::rate_scaled(frac, rep.base_rate, base, cfg.inactive_timeout(), cfg.timeout_fn, cfg.max_depth);
    rep.truth_threshold =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(frac * rep.base_rate * cfg.active_timeout_s)));
  } else {
    const auto t = static_cast<std::uint64_t>(std::llround(cfg.threshold.value));
    if (t == 0) throw ConfigError("absolute threshold rounds to zero");
    rep.trie = TrieConfig::uniform(t, base, cfg.inactive_timeout(), cfg.timeout_fn, cfg.max_depth);
    rep.truth_threshold = t;
  }
  rep.trie.count_mode = cfg.count_mode;
  rep.trie.report_hh_on_expand = cfg.report_hh_on_expand;
  rep.trie.validate();

  DetectorConfig dc;
  dc.mode = cfg.mode;
  dc.trie = rep.trie;
  dc.budget = cfg.memory_bytes ? MemoryBudget::from_bytes(*cfg.memory_bytes, cfg.max_depth) : MemoryBudget::unlimited();
  dc.filter_bits = static_cast<std::size_t>(cfg.filter_bytes * 8);
  dc.filter_hashes = cfg.filter_hashes;
  dc.filter_epoch = base;
  dc.change = cfg.change();
  Detector det(dc);

  std::ofstream events_file;
  if (!cfg.events_out.empty()) {
    events_file.open(cfg.events_out);
    if (!events_file) throw ConfigError("cannot open " + cfg.events_out + " for writing");
  }
  DigestQueue queue(cfg.queue_capacity);
  Collector collector(queue, events_file.is_open() ? &events_file : nullptr);

  const Duration tick = cfg.series_tick();
  Timestamp next_sample = 0;
  auto sample = [&](Timestamp t) {
    const auto& cd = det.trie().change_detector();
    rep.series.push_back({t, det.trie().depth(), det.trie().node_count(), det.trie().bits_in_use(),
                          cd ? cd->window_average(t) : 0.0});
  };

  for (const auto& p : packets) {
    while (next_sample <= p.ts) {
      sample(next_sample);
      next_sample += tick;
    }
    const StepResult r = det.on_packet(p);
    for (const auto& ev : r.events) queue.emit(ev);
    collector.poll();
  }
  collector.poll();
  rep.packets = packets.size();
  rep.trace_end = packets.empty() ? 0 : packets.back().ts + 1;
  while (next_sample < rep.trace_end) {
    sample(next_sample);
    next_sample += tick;
  }
  if (!packets.empty()) sample(rep.trace_end);
  rep.digests = collector.log();
  rep.dropped = queue.dropped();
  rep.stats = det.trie().stats();
  if (det.trie().change_detector()) rep.change_alarms = det.trie().change_detector()->alarms();

  const EventKind report_kind = cfg.mode == Mode::hhh ? EventKind::hhh : EventKind::superspreader;
  for (const auto& d : rep.digests) {
    if (rep.target && d.event.kind == report_kind && d.event.prefix == *rep.target) {
      rep.first_target_report = d.event.timestamp;
      rep.first_target_window = d.event.timestamp / base;
      break;
    }
  }

  // Complete truth windows; the last one is dropped because its reports
  // arrive only with packets of the following window.
  rep.windows = static_cast<std::size_t>(rep.trace_end / base);
  std::vector<PrefixSet> reported(rep.windows);
  for (const auto& d : rep.digests) {
    if (d.event.kind != report_kind) continue;
    const auto w = static_cast<std::size_t>(d.event.window_start / base);
    if (w < rep.windows) reported[w].insert(d.event.prefix);
  }
  std::map<unsigned, std::pair<double, double>> sums;
  std::map<unsigned, std::size_t> counts;
  std::size_t begin = 0;
  for (std::size_t w = 0; w + 1 < rep.windows; ++w) {
    const Timestamp lo = w * base, hi = (w + 1) * base;
    while (begin < packets.size() && packets[begin].ts < lo) ++begin;
    std::size_t end = begin;
    while (end < packets.size() && packets[end].ts < hi) ++end;
    if (w < cfg.warmup_windows) continue;
    PrefixSet truth;
    if (cfg.mode == Mode::hhh) {
      std::vector<KeyWeight> items;
      items.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i)
        items.push_back({packets[i].src, detail::volume_of(packets[i], cfg.count_mode)});
      truth = exact_hhh(items, rep.truth_threshold, cfg.max_depth);
    } else {
      std::vector<KeyElement> pairs;
      pairs.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i)
        pairs.push_back({det.key_of(packets[i]), det.element_of(packets[i])});
      truth = exact_spreaders(pairs, rep.truth_threshold, cfg.max_depth);
    }
    if (truth.empty() && reported[w].empty()) continue;
    for (unsigned r : cfg.relax) {
      const Score s = score(reported[w], truth, r);
      rep.scores.push_back({w, r, s});
      sums[r].first += s.recall;
      sums[r].second += s.precision;
      ++counts[r];
    }
  }
  for (unsigned r : cfg.relax) {
    RelaxSummary s;
    s.relax = r;
    s.windows = counts[r];
    if (s.windows > 0) {
      s.recall = sums[r].first / static_cast<double>(s.windows);
      s.precision = sums[r].second / static_cast<double>(s.windows);
    }
    rep.summary.push_back(s);
  }
  return rep;
}

inline void write_report(const RunReport& rep, const std::string& dir);

/// Loads the configured trace, runs, and writes the report directory when
/// one is configured.
inline RunReport run(RunConfig cfg) {
  cfg.validate();
  if (!cfg.report_dir.empty()) {
    std::filesystem::create_directories(cfg.report_dir);
    if (cfg.events_out.empty()) cfg.events_out = (std::filesystem::path(cfg.report_dir) / "events.jsonl").string();
  }
  const auto packets = load_packets(cfg);
  RunReport rep = run(cfg, packets);
  if (!cfg.report_dir.empty()) write_report(rep, cfg.report_dir);
  return rep;
}

inline std::string scores_csv(const RunReport& rep) {
  std::ostringstream o;
  o << "window,mode,relax,recall,precision,matched,truth,reported\n";
  for (const auto& s : rep.scores)
    o << s.window << ',' << to_string(rep.config.mode) << ',' << s.relax << ',' << s.score.recall << ','
      << s.score.precision << ',' << s.score.matched << ',' << s.score.truth << ',' << s.score.reported << '\n';
  return o.str();
}

inline std::string series_csv(const RunReport& rep) {
  std::ostringstream o;
  o << "ts_us,depth,nodes,bits_in_use,change_average\n";
  for (const auto& p : rep.series)
    o << p.ts << ',' << p.depth << ',' << p.nodes << ',' << p.bits_in_use << ',' << p.change_average << '\n';
  return o.str();
}

inline nlohmann::ordered_json config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["mode"] = std::string(to_string(c.mode));
  j["count"] = c.count_mode == CountMode::bytes ? "bytes" : "packets";
  j["memory_bytes"] = c.memory_bytes ? nlohmann::ordered_json(*c.memory_bytes) : nlohmann::ordered_json("unbounded");
  j["filter_bytes"] = c.filter_bytes;
  j["filter_hashes"] = c.filter_hashes;
  j["threshold"] = c.threshold.to_string();
  j["active_timeout_s"] = c.active_timeout_s;
  j["inactive_timeout_s"] = c.inactive_timeout_s;
  j["timeout_fn"] = c.timeout_fn.to_string();
  j["max_depth"] = c.max_depth;
  j["relax"] = c.relax;
  j["trace"] = c.trace_path;
  j["synthetic"] = c.synthetic_path;
  j["seed"] = c.seed;
  if (c.nominal_rate) j["nominal_rate"] = *c.nominal_rate;
  j["change_alarm_threshold"] = c.change_threshold;
  j["change_window_s"] = static_cast<double>(c.change().window) / 1e6;
  j["change_tick_s"] = static_cast<double>(c.change().tick) / 1e6;
  j["warmup_windows"] = c.warmup_windows;
  if (c.target) j["target"] = c.target->to_string();
  return j;
}

inline std::string summary_json(const RunReport& rep) {
  nlohmann::ordered_json j;
  j["config"] = config_json(rep.config);
  nlohmann::ordered_json th;
  th["base_rate_per_s"] = rep.base_rate;
  th["truth_threshold"] = rep.truth_threshold;
  th["conversion"] = rep.config.threshold.percent ? "pct * base_rate * t_A(level)" : "absolute";
  std::vector<std::uint64_t> per_level(rep.trie.threshold_per_level.begin(),
                                       rep.trie.threshold_per_level.begin() + rep.config.max_depth + 1);
  std::vector<double> timeouts;
  for (unsigned l = 0; l <= rep.config.max_depth; ++l)
    timeouts.push_back(static_cast<double>(rep.trie.active_timeout(l)) / 1e6);
  th["per_level"] = per_level;
  th["active_timeout_s_per_level"] = timeouts;
  j["threshold"] = th;
  j["packets"] = rep.packets;
  j["trace_end_us"] = rep.trace_end;
  j["windows"] = rep.windows;
  j["events"] = rep.digests.size();
  j["dropped"] = rep.dropped;
  j["change_alarms"] = rep.change_alarms;
  nlohmann::ordered_json st;
  st["expansions"] = rep.stats.expansions;
  st["collapses"] = rep.stats.collapses;
  st["keeps"] = rep.stats.keeps;
  st["invalidations"] = rep.stats.invalidations;
  st["updates"] = rep.stats.updates;
  st["root_resets"] = rep.stats.root_resets;
  st["table_full"] = rep.stats.table_full;
  st["reclaims"] = rep.stats.reclaims;
  j["actions"] = st;
  nlohmann::ordered_json scores = nlohmann::ordered_json::array();
  for (const auto& s : rep.summary)
    scores.push_back({{"relax", s.relax}, {"recall", s.recall}, {"precision", s.precision}, {"windows", s.windows}});
  j["scores"] = scores;
  if (rep.target) {
    j["target"] = rep.target->to_string();
    j["first_target_report_us"] =
        rep.first_target_report ? nlohmann::ordered_json(*rep.first_target_report) : nlohmann::ordered_json(nullptr);
    j["first_target_window"] =
        rep.first_target_window ? nlohmann::ordered_json(*rep.first_target_window) : nlohmann::ordered_json(nullptr);
  }
  if (!rep.series.empty()) {
    j["final_depth"] = rep.series.back().depth;
    j["final_nodes"] = rep.series.back().nodes;
  }
  return j.dump(2) + "\n";
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
}

inline void write_report(const RunReport& rep, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  write_text(d / "scores.csv", scores_csv(rep));
  write_text(d / "series.csv", series_csv(rep));
  write_text(d / "summary.json", summary_json(rep));
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { memory, threshold, timeout_fn, filter_size };

constexpr std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::memory: return "memory";
    case SweepAxis::threshold: return "threshold";
    case SweepAxis::timeout_fn: return "timeout_fn";
    case SweepAxis::filter_size: return "filter_size";
  }
  return "?";
}

inline SweepAxis parse_sweep_axis(std::string_view s) {
  for (auto a : {SweepAxis::memory, SweepAxis::threshold, SweepAxis::timeout_fn, SweepAxis::filter_size})
    if (to_string(a) == s) return a;
  throw ConfigError("sweep axis must be memory, threshold, timeout_fn or filter_size, got '" + std::string(s) + "'");
}

inline RunConfig apply_axis(RunConfig c, SweepAxis axis, const std::string& value) {
  switch (axis) {
    case SweepAxis::memory:
      if (value == "unbounded") c.memory_bytes.reset();
      else c.memory_bytes = parse_byte_size(value);
      break;
    case SweepAxis::threshold: c.threshold = ThresholdSpec::parse(value); break;
    case SweepAxis::timeout_fn: c.timeout_fn = TimeoutPolicy::parse(value); break;
    case SweepAxis::filter_size: c.filter_bytes = parse_byte_size(value); break;
  }
  return c;
}

struct SweepRow {
  std::string value;
  RunReport report;
};

/// One run per value over the same packets (same seed). Runs are spread
/// over `threads` workers; results keep the order of `values`.
inline std::vector<SweepRow> sweep(const RunConfig& base, SweepAxis axis, const std::vector<std::string>& values,
                                   unsigned threads = 0) {
  if (values.empty()) throw ConfigError("sweep axis " + std::string(to_string(axis)) + " has no values");
  std::vector<RunConfig> configs;
  for (const auto& v : values) {
    RunConfig c = apply_axis(base, axis, v);
    c.events_out.clear();
    c.report_dir.clear();
    c.validate();
    configs.push_back(std::move(c));
  }
  const auto packets = load_packets(base);
  std::vector<SweepRow> rows(values.size());
  std::vector<std::exception_ptr> errors(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) {
      try {
        rows[i] = {values[i], run(configs[i], packets)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(configs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

inline std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
  std::ostringstream o;
  o << to_string(axis) << ",relax,recall,precision,windows,first_target_window,final_nodes,bits_in_use,events\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    for (const auto& s : r.summary) {
      o << row.value << ',' << s.relax << ',' << s.recall << ',' << s.precision << ',' << s.windows << ',';
      if (r.first_target_window) o << *r.first_target_window;
      o << ',' << (r.series.empty() ? 0 : r.series.back().nodes) << ','
        << (r.series.empty() ? 0 : r.series.back().bits_in_use) << ',' << r.digests.size() << '\n';
    }
  }
  return o.str();
}

}  // namespace etrie

#endif  // ETRIE_SIM_HPP
