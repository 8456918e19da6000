#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "etrie/pcap.hpp"
#include "etrie/synthetic.hpp"
#include "etrie/traces.hpp"

using namespace etrie;

namespace {

std::vector<PacketRecord> three_packets() {
  return {{1'000'000, 0x0A000001u, 0xC0A80001u, 60},
          {1'000'500, 0x0A000002u, 0xC0A80002u, 1500},
          {2'250'000, 0x0A000003u, 0xC0A80003u, 576}};
}

std::string capture(const std::vector<PacketRecord>& ps, bool arp_first = false) {
  std::ostringstream out(std::ios::binary);
  PcapWriter w(out);
  if (arp_first) w.write_arp(ps.empty() ? 0 : ps.front().ts);
  for (const auto& p : ps) w.write_ipv4(p);
  return out.str();
}

std::uint64_t count_in(const std::vector<PacketRecord>& ps, const Prefix& p) {
  std::uint64_t n = 0;
  for (const auto& r : ps) n += p.contains(r.src);
  return n;
}

}  // namespace

TEST(Pcap, ThreePacketCapture) {
  std::istringstream in(capture(three_packets()));
  PcapStats st;
  const auto got = read_pcap(in, &st);
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0].ts, 0u);  // rebased
  EXPECT_EQ(got[1].ts, 500u);
  EXPECT_EQ(got[2].ts, 1'250'000u);
  EXPECT_EQ(got[1].src, 0x0A000002u);
  EXPECT_EQ(got[1].dst, 0xC0A80002u);
  EXPECT_EQ(got[1].length, 1500u);
  EXPECT_EQ(st.ipv4, 3u);
  EXPECT_FALSE(st.truncated);
}

TEST(Pcap, ArpFrameSkipped) {
  std::istringstream in(capture(three_packets(), true));
  PcapStats st;
  EXPECT_EQ(read_pcap(in, &st).size(), 3u);
  EXPECT_EQ(st.skipped_non_ipv4, 1u);
  EXPECT_EQ(st.frames, 4u);
}

TEST(Pcap, EmptyCapture) {
  std::istringstream in(capture({}));
  EXPECT_TRUE(read_pcap(in).empty());
}

TEST(Pcap, TruncatedFinalRecordWarnsAndStops) {
  std::string bytes = capture(three_packets());
  bytes.resize(bytes.size() - 10);
  std::istringstream in(bytes);
  PcapStats st;
  EXPECT_EQ(read_pcap(in, &st).size(), 2u);
  EXPECT_TRUE(st.truncated);
  ASSERT_EQ(st.warnings.size(), 1u);
}

TEST(Pcap, MalformedFilesAreHardErrors) {
  std::istringstream short_in(std::string("\xd4\xc3\xb2", 3));
  EXPECT_THROW(read_pcap(short_in), TraceError);
  std::string bad = capture(three_packets());
  bad[0] = 0;
  std::istringstream bad_in(bad);
  EXPECT_THROW(read_pcap(bad_in), TraceError);
}

TEST(Pcap, BigEndianNanosecondHeader) {
  // Swap the file into big-endian nanosecond form by hand.
  std::string le = capture({three_packets()[0]});
  std::string be = le;
  auto swap32 = [&](std::size_t off) { std::reverse(be.begin() + off, be.begin() + off + 4); };
  const std::uint8_t magic[4] = {0xa1, 0xb2, 0x3c, 0x4d};
  for (int i = 0; i < 4; ++i) be[i] = static_cast<char>(magic[i]);
  std::swap(be[4], be[5]);
  std::swap(be[6], be[7]);
  for (std::size_t off : {8u, 12u, 16u, 20u}) swap32(off);
  for (std::size_t off : {24u, 28u, 32u, 36u}) swap32(off);
  // ts fraction field is now read as nanoseconds; 0 either way for this record.
  std::istringstream in(be);
  const auto got = read_pcap(in);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].src, 0x0A000001u);
}

TEST(Csv, RoundTrip) {
  const std::vector<PacketRecord> ps{{0, 0x01020304u, 0x05060708u, 64}, {10, 0xFFFFFFFFu, 0, 1500}};
  std::stringstream io;
  write_csv(io, ps);
  EXPECT_EQ(read_csv(io), ps);
}

TEST(Csv, IntegerAddressesAndComments) {
  std::istringstream in("# comment\nts_us,src,dst,len\n5,16909060,1.1.1.1,40\n");
  const auto got = read_csv(in);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].src, 0x01020304u);
}

TEST(Csv, BadAddressNamesTheLine) {
  std::istringstream in("ts_us,src,dst,len\n0,1.2.3.4,5.6.7.8,64\n1,1.2.3,5.6.7.8,64\n");
  try {
    read_csv(in, {}, "t.csv");
    FAIL() << "expected an error";
  } catch (const TraceError& e) {
    EXPECT_NE(std::string(e.what()).find("t.csv:3"), std::string::npos) << e.what();
  }
}

TEST(Csv, OutOfOrderRejectedByDefault) {
  const std::string text = "ts_us,src,dst,len\n10,1.1.1.1,2.2.2.2,64\n5,1.1.1.1,2.2.2.2,64\n20,1.1.1.1,2.2.2.2,64\n";
  std::istringstream in(text);
  EXPECT_THROW(read_csv(in), TraceError);
  std::istringstream in2(text);
  const auto got = read_csv(in2, CsvOptions{true, 4});
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0].ts, 5u);
  EXPECT_EQ(got[2].ts, 20u);
}

TEST(Csv, ReorderWindowIsBounded) {
  std::istringstream in("100,1.1.1.1,2.2.2.2,64\n200,1.1.1.1,2.2.2.2,64\n300,1.1.1.1,2.2.2.2,64\n1,1.1.1.1,2.2.2.2,64\n");
  EXPECT_THROW(read_csv(in, CsvOptions{true, 2}), TraceError);
}

TEST(Generator, PlantedShareWithinThreeSigma) {
  // Two complementary halves carry everything, so hits in P are binomial.
  SyntheticSpec s;
  s.rate_pps = 10'000;
  s.duration_s = 10;
  const Prefix p = *Prefix::parse("0.0.0.0/1");
  s.heavies.push_back({p, 0.5});
  s.heavies.push_back({*Prefix::parse("128.0.0.0/1"), 0.5});
  const auto ps = generate(s, 5);
  const double n = static_cast<double>(ps.size());
  EXPECT_NEAR(n, 1e5, 3 * std::sqrt(1e5));
  EXPECT_NEAR(static_cast<double>(count_in(ps, p)), n / 2, 3 * std::sqrt(n / 4));
}

TEST(Generator, DeterministicForSeed) {
  SyntheticSpec s;
  s.duration_s = 2;
  s.heavies.push_back({*Prefix::parse("10.1.0.0/16"), 0.1});
  s.attacks.push_back({AttackKind::dos, 0.5, 1.0, 500, 0x01010101u, 0x02020202u, 0});
  EXPECT_EQ(generate(s, 9), generate(s, 9));
  EXPECT_NE(generate(s, 9), generate(s, 10));
}

TEST(Generator, ScanReachesDistinctDestinations) {
  SyntheticSpec s;
  s.duration_s = 5;
  s.rate_pps = 100;
  s.attacks.push_back({AttackKind::scan, 1.0, 0, 1000, 0x0B0B0B0Bu, 0, 1000});
  const auto ps = generate(s, 1);
  std::set<std::uint32_t> dsts;
  std::uint64_t sent = 0;
  for (const auto& r : ps)
    if (r.src == 0x0B0B0B0Bu) {
      dsts.insert(r.dst);
      ++sent;
    }
  EXPECT_EQ(sent, 1000u);
  EXPECT_GE(dsts.size(), 990u);
}

TEST(Generator, DosTargetsOneVictim) {
  SyntheticSpec s;
  s.duration_s = 3;
  s.attacks.push_back({AttackKind::dos, 1.0, 1.0, 1000, 0x0C0C0C0Cu, 0x0D0D0D0Du, 0});
  const auto ps = generate(s, 1);
  std::uint64_t n = 0;
  for (const auto& r : ps)
    if (r.src == 0x0C0C0C0Cu) {
      EXPECT_EQ(r.dst, 0x0D0D0D0Du);
      EXPECT_GE(r.ts, 1'000'000u);
      EXPECT_LT(r.ts, 2'000'000u);
      ++n;
    }
  EXPECT_EQ(n, 1000u);
  EXPECT_TRUE(std::is_sorted(ps.begin(), ps.end(), [](auto& a, auto& b) { return a.ts < b.ts; }));
}

TEST(Generator, SpecValidation) {
  SyntheticSpec s;
  s.heavies.push_back({Prefix{0, 1}, 0.7});
  s.heavies.push_back({Prefix{1u << 31, 1}, 0.7});
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(synthetic_from_json(nlohmann::json::parse(R"({"attacks":[{"kind":"flood","source":"1.1.1.1"}]})")),
               ConfigError);
  const auto ok = synthetic_from_json(nlohmann::json::parse(
      R"({"duration_s": 4, "heavies": [{"prefix": "10.0.0.0/8", "share": 0.2}],
          "attacks": [{"kind": "scan", "start_s": 1, "rate_pps": 10, "source": "1.2.3.4", "dst_count": 5}]})"));
  EXPECT_EQ(ok.duration_s, 4);
  ASSERT_EQ(ok.attacks.size(), 1u);
  EXPECT_EQ(ok.attacks[0].source, 0x01020304u);
}
