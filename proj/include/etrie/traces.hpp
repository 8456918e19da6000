#ifndef ETRIE_TRACES_HPP
#define ETRIE_TRACES_HPP

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "etrie/prefix.hpp"

namespace etrie {

struct PacketRecord {
  Timestamp ts = 0;  // microseconds since trace start
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  std::uint32_t length = 0;  // IP total length in bytes

  friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pull-based packet stream.
class PacketSource {
 public:
  virtual ~PacketSource() = default;
  virtual std::optional<PacketRecord> next() = 0;
};

class VectorSource final : public PacketSource {
 public:
  explicit VectorSource(std::vector<PacketRecord> packets) : packets_(std::move(packets)) {}
  std::optional<PacketRecord> next() override {
    if (pos_ >= packets_.size()) return std::nullopt;
    return packets_[pos_++];
  }

 private:
  std::vector<PacketRecord> packets_;
  std::size_t pos_ = 0;
};

inline std::vector<PacketRecord> collect(PacketSource& src) {
  std::vector<PacketRecord> out;
  while (auto p = src.next()) out.push_back(*p);
  return out;
}

// ---------------------------------------------------------------------------
// CSV: header `ts_us,src,dst,len`, addresses dotted-quad or integer.

struct CsvOptions {
  bool allow_reorder = false;
  std::size_t reorder_window = 1024;  // records buffered when reordering
};

inline void write_csv(std::ostream& out, const std::vector<PacketRecord>& packets) {
  out << "ts_us,src,dst,len\n";
  for (const auto& p : packets)
    out << p.ts << ',' << format_ipv4(p.src) << ',' << format_ipv4(p.dst) << ',' << p.length << '\n';
}

inline void write_csv(const std::string& path, const std::vector<PacketRecord>& packets) {
  std::ofstream out(path);
  if (!out) throw TraceError("cannot open " + path + " for writing");
  write_csv(out, packets);
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

template <class T>
std::optional<T> parse_uint(std::string_view s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Streams a CSV trace. Out-of-order timestamps are an error unless
/// reordering is enabled, which sorts within a bounded window and still
/// rejects records older than anything already emitted.
class CsvReader final : public PacketSource {
 public:
  CsvReader(std::istream& in, CsvOptions opts = {}, std::string name = "<csv>")
      : in_(&in), opts_(opts), name_(std::move(name)) {}

  std::optional<PacketRecord> next() override {
    if (!opts_.allow_reorder) return read_one();
    while (!eof_ && heap_.size() < std::max<std::size_t>(1, opts_.reorder_window)) {
      auto rec = read_one();
      if (!rec) break;
      heap_.push(*rec);
    }
    if (heap_.empty()) return std::nullopt;
    PacketRecord p = heap_.top();
    heap_.pop();
    if (emitted_any_ && p.ts < last_emitted_)
      throw TraceError(name_ + ": record at ts " + std::to_string(p.ts) + " is outside the reorder window");
    last_emitted_ = p.ts;
    emitted_any_ = true;
    return p;
  }

 private:
  std::optional<PacketRecord> read_one() {
    std::string line;
    while (std::getline(*in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      if (!seen_content_ && line.rfind("ts", 0) == 0) {
        seen_content_ = true;
        continue;
      }
      seen_content_ = true;
      auto f = detail::split_commas(line);
      if (f.size() != 4) fail("expected 4 columns");
      auto ts = detail::parse_uint<Timestamp>(f[0]);
      if (!ts) fail("bad timestamp '" + std::string(f[0]) + "'");
      auto src = parse_ipv4(f[1]);
      if (!src) fail("bad source address '" + std::string(f[1]) + "'");
      auto dst = parse_ipv4(f[2]);
      if (!dst) fail("bad destination address '" + std::string(f[2]) + "'");
      auto len = detail::parse_uint<std::uint32_t>(f[3]);
      if (!len) fail("bad length '" + std::string(f[3]) + "'");
      if (!opts_.allow_reorder && seen_any_ && *ts < last_read_)
        fail("timestamp " + std::to_string(*ts) + " goes backwards (use reordering to accept)");
      last_read_ = std::max(last_read_, *ts);
      seen_any_ = true;
      return PacketRecord{*ts, *src, *dst, *len};
    }
    eof_ = true;
    return std::nullopt;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw TraceError(name_ + ":" + std::to_string(line_no_) + ": " + what);
  }

  struct Later {
    bool operator()(const PacketRecord& a, const PacketRecord& b) const { return a.ts > b.ts; }
  };

  std::istream* in_;
  CsvOptions opts_;
  std::string name_;
  std::size_t line_no_ = 0;
  bool eof_ = false;
  bool seen_content_ = false;
  bool seen_any_ = false;
  Timestamp last_read_ = 0;
  bool emitted_any_ = false;
  Timestamp last_emitted_ = 0;
  std::priority_queue<PacketRecord, std::vector<PacketRecord>, Later> heap_;
};

inline std::vector<PacketRecord> read_csv(std::istream& in, CsvOptions opts = {}, std::string name = "<csv>") {
  CsvReader r(in, opts, std::move(name));
  return collect(r);
}

inline std::vector<PacketRecord> read_csv(const std::string& path, CsvOptions opts = {}) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open " + path);
  return read_csv(in, opts, path);
}

}  // namespace etrie

#endif  // ETRIE_TRACES_HPP
