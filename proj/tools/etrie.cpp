// etrie: replay traces through the elastic trie, score against exact truth,
// sweep parameters and generate synthetic traces.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "etrie/etrie.hpp"

namespace {

struct Options {
  std::string mode = "hhh";
  std::string count = "packets";
  std::string memory = "unbounded";
  std::string filter = "32KB";
  unsigned filter_hashes = 4;
  std::string threshold = "5%";
  double active = 20;
  double inactive = 300;
  std::string timeout_fn = "fixed";
  unsigned max_depth = 32;
  std::vector<unsigned> relax{0, 2};
  std::string trace;
  std::string synthetic;
  bool reorder = false;
  std::uint64_t seed = 1;
  double nominal_rate = 0;
  std::int64_t change_threshold = 50;
  double change_window = 0;
  double change_tick = 0;
  unsigned warmup = 0;
  double series_tick = 0;
  std::string target;
  bool hh_on_expand = false;
  std::string events_out;
  std::string report_dir;
};

void add_run_options(CLI::App& app, Options& o) {
  app.add_option("--mode", o.mode, "hhh, spread or ddos-victim")->check(CLI::IsMember({"hhh", "spread", "ddos-victim"}));
  app.add_option("--count", o.count, "hhh volume unit")->check(CLI::IsMember({"packets", "bytes"}));
  app.add_option("--memory-bytes", o.memory, "trie memory budget, e.g. 8KB, or 'unbounded'");
  app.add_option("--filter-bytes", o.filter, "distinct-flow filter size in spread modes");
  app.add_option("--filter-hashes", o.filter_hashes, "filter hash functions");
  app.add_option("--threshold", o.threshold, "absolute volume or percentage such as 5%");
  app.add_option("--active-timeout", o.active, "base active timeout in seconds");
  app.add_option("--inactive-timeout", o.inactive, "inactive timeout in seconds");
  app.add_option("--timeout-fn", o.timeout_fn, "fixed or f:<y>");
  app.add_option("--max-depth", o.max_depth, "deepest prefix length")->check(CLI::Range(1, 32));
  app.add_option("--relax", o.relax, "relaxation bits to score with")->delimiter(',');
  auto* trace = app.add_option("--trace", o.trace, "pcap or CSV trace");
  auto* synth = app.add_option("--synthetic", o.synthetic, "synthetic trace spec (JSON)");
  trace->excludes(synth);
  app.add_flag("--reorder", o.reorder, "accept slightly out-of-order CSV records");
  app.add_option("--seed", o.seed, "synthetic generator seed");
  app.add_option("--nominal-rate", o.nominal_rate, "volume per second behind percent thresholds");
  app.add_option("--change-threshold", o.change_threshold, "change alarm threshold");
  app.add_option("--change-window", o.change_window, "moving-average window in seconds (default: active timeout)");
  app.add_option("--change-tick", o.change_tick, "moving-average tick in seconds (default: min(1, window))");
  app.add_option("--warmup", o.warmup, "leading windows excluded from scoring");
  app.add_option("--series-tick", o.series_tick, "time-series sampling period in seconds");
  app.add_option("--target", o.target, "prefix whose first report is timed");
  app.add_flag("--hh-on-expand", o.hh_on_expand, "also report HH events on expansion");
  app.add_option("--events-out", o.events_out, "line-delimited JSON event log");
  app.add_option("--report-dir", o.report_dir, "directory for scores, series and summary");
}

etrie::RunConfig to_config(const Options& o) {
  etrie::RunConfig c;
  c.mode = etrie::parse_mode(o.mode);
  c.count_mode = o.count == "bytes" ? etrie::CountMode::bytes : etrie::CountMode::packets;
  if (o.memory != "unbounded") c.memory_bytes = etrie::parse_byte_size(o.memory);
  c.filter_bytes = etrie::parse_byte_size(o.filter);
  c.filter_hashes = o.filter_hashes;
  c.threshold = etrie::ThresholdSpec::parse(o.threshold);
  c.active_timeout_s = o.active;
  c.inactive_timeout_s = o.inactive;
  c.timeout_fn = etrie::TimeoutPolicy::parse(o.timeout_fn);
  c.max_depth = o.max_depth;
  c.relax = o.relax;
  c.trace_path = o.trace;
  c.synthetic_path = o.synthetic;
  c.allow_reorder = o.reorder;
  c.seed = o.seed;
  if (o.nominal_rate > 0) c.nominal_rate = o.nominal_rate;
  c.change_threshold = o.change_threshold;
  if (o.change_window > 0) c.change_window_s = o.change_window;
  if (o.change_tick > 0) c.change_tick_s = o.change_tick;
  c.warmup_windows = o.warmup;
  c.series_tick_s = o.series_tick;
  if (!o.target.empty()) {
    auto p = etrie::Prefix::parse(o.target);
    if (!p) throw etrie::ConfigError("bad target prefix '" + o.target + "'");
    c.target = *p;
  }
  c.report_hh_on_expand = o.hh_on_expand;
  c.events_out = o.events_out;
  c.report_dir = o.report_dir;
  return c;
}

void print_summary(const etrie::RunReport& r) {
  std::printf("packets %llu, events %zu, dropped %llu, change alarms %llu\n",
              static_cast<unsigned long long>(r.packets), r.digests.size(),
              static_cast<unsigned long long>(r.dropped), static_cast<unsigned long long>(r.change_alarms));
  std::printf("threshold %s -> %llu per window\n", r.config.threshold.to_string().c_str(),
              static_cast<unsigned long long>(r.truth_threshold));
  for (const auto& s : r.summary)
    std::printf("relax %u: recall %.4f precision %.4f over %zu windows\n", s.relax, s.recall, s.precision, s.windows);
  if (r.target) {
    if (r.first_target_window)
      std::printf("target %s first reported at %.3f s (window %llu)\n", r.target->to_string().c_str(),
                  static_cast<double>(*r.first_target_report) / 1e6,
                  static_cast<unsigned long long>(*r.first_target_window));
    else
      std::printf("target %s never reported\n", r.target->to_string().c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"elastic trie measurement simulator"};
  app.set_config("--config", "", "TOML/INI file with option defaults; command-line flags win");
  app.require_subcommand(1);

  Options run_opts;
  auto* run = app.add_subcommand("run", "replay one trace and score it");
  add_run_options(*run, run_opts);

  Options sweep_opts;
  std::string axis;
  std::vector<std::string> values;
  unsigned threads = 0;
  auto* sweep = app.add_subcommand("sweep", "one run per value along an axis");
  add_run_options(*sweep, sweep_opts);
  sweep->add_option("--axis", axis, "memory, threshold, timeout_fn or filter_size")->required();
  sweep->add_option("--values", values, "comma-separated axis values")->delimiter(',');
  sweep->add_option("--threads", threads, "worker threads (0: hardware concurrency)");

  std::string gen_spec, gen_out;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("generate", "write a synthetic trace as CSV or pcap");
  gen->add_option("--synthetic", gen_spec, "synthetic trace spec (JSON)")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output path; .pcap writes pcap, anything else CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto rep = etrie::run(to_config(run_opts));
      print_summary(rep);
      if (!run_opts.report_dir.empty()) std::printf("report written to %s\n", run_opts.report_dir.c_str());
    } else if (*sweep) {
      const auto ax = etrie::parse_sweep_axis(axis);
      const auto rows = etrie::sweep(to_config(sweep_opts), ax, values, threads);
      const std::string csv = etrie::sweep_csv(ax, rows);
      if (!sweep_opts.report_dir.empty()) {
        std::filesystem::create_directories(sweep_opts.report_dir);
        const auto path = std::filesystem::path(sweep_opts.report_dir) / "sweep.csv";
        etrie::write_text(path, csv);
        std::printf("sweep written to %s\n", path.string().c_str());
      }
      std::fputs(csv.c_str(), stdout);
    } else if (*gen) {
      const auto packets = etrie::generate(etrie::load_synthetic(gen_spec), gen_seed);
      if (std::filesystem::path(gen_out).extension() == ".pcap") etrie::write_pcap(gen_out, packets);
      else etrie::write_csv(gen_out, packets);
      std::printf("%zu packets written to %s\n", packets.size(), gen_out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
