#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "builders.hpp"
#include "etd/tls.hpp"

namespace etd {
namespace {

using test::Conversation;

Bytes header(std::uint8_t type, std::uint8_t major, std::uint8_t minor, std::uint16_t length) {
  return {type, major, minor, static_cast<std::uint8_t>(length >> 8), static_cast<std::uint8_t>(length)};
}

TEST(TlsRecord, DetectionRule) {
  EXPECT_TRUE(looks_like_tls_record(header(22, 3, 1, 100)));
  EXPECT_TRUE(looks_like_tls_record(header(20, 3, 0, 1)));
  EXPECT_TRUE(looks_like_tls_record(header(23, 3, 4, kMaxTlsRecordLength)));
  EXPECT_FALSE(looks_like_tls_record(header(23, 3, 4, kMaxTlsRecordLength + 1)));
  EXPECT_FALSE(looks_like_tls_record(header(19, 3, 1, 10)));
  EXPECT_FALSE(looks_like_tls_record(header(24, 3, 1, 10)));
  EXPECT_FALSE(looks_like_tls_record(header(22, 2, 1, 10)));
  EXPECT_FALSE(looks_like_tls_record(header(22, 3, 5, 10)));
  EXPECT_FALSE(looks_like_tls_record(Bytes{22, 3, 1, 0}));
  const std::string http = "GET / HTTP/1.1\r\n";
  EXPECT_FALSE(looks_like_tls_record(ByteView(reinterpret_cast<const std::uint8_t*>(http.data()), http.size())));
}

TEST(TlsVersion, WireMapping) {
  EXPECT_EQ(tls_version_from_wire(0x0300), TlsVersion::ssl3);
  EXPECT_EQ(tls_version_from_wire(0x0303), TlsVersion::tls1_2);
  EXPECT_EQ(tls_version_from_wire(0x0304), TlsVersion::tls1_3);
  EXPECT_EQ(tls_version_from_wire(0x7F1C), TlsVersion::unknown);
  EXPECT_EQ(tls_version_ordinal(TlsVersion::ssl3), 0);
  EXPECT_EQ(tls_version_ordinal(TlsVersion::tls1_3), 4);
  EXPECT_EQ(tls_version_ordinal(TlsVersion::unknown), -1);
}

TEST(Handshake, FixtureMatchesGeneratorGroundTruth) {
  std::ifstream in(test::data_dir() / "ten_sessions.expected.json");
  const auto expected = nlohmann::json::parse(in);
  const auto sessions = test::fixture_sessions();
  ASSERT_EQ(sessions.size(), expected["sessions"].size());
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& e = expected["sessions"][i];
    const auto& s = sessions[i];
    SCOPED_TRACE(e["name"].get<std::string>());
    EXPECT_EQ(s.packets.size(), e["packets"].get<std::size_t>());
    EXPECT_EQ(s.count(Direction::forward), e["fwd_packets"].get<std::size_t>());
    EXPECT_EQ(s.initiator.addr, *IpAddress::parse(e["client"][0]));
    EXPECT_EQ(s.initiator.port, e["client"][1].get<int>());
    const auto det = detect_tls(s);
    EXPECT_EQ(det.is_tls, e["tls"].get<bool>());
    const auto hs = parse_handshake(s);
    if (!e["tls"].get<bool>()) {
      EXPECT_FALSE(std::holds_alternative<ParsedHandshake>(hs));
      continue;
    }
    ASSERT_TRUE(std::holds_alternative<ParsedHandshake>(hs));
    const auto& rec = std::get<ParsedHandshake>(hs).record;
    EXPECT_EQ(rec.sni.value_or(""), e["sni"].get<std::string>());
    const auto version = e["version"].get<std::string>();
    EXPECT_EQ(rec.tls_version, version == "TLSv13" ? TlsVersion::tls1_3 : TlsVersion::tls1_2);
    EXPECT_EQ(rec.selected_cipher.value_or(0), e["cipher"].get<int>());
    EXPECT_EQ(rec.resumed, e["resumed"].get<bool>());
    EXPECT_EQ(rec.cert_chain_fuid, e["cert_fuids"].get<std::vector<std::string>>());
  }
}

TEST(Handshake, Tls13PskMeansResumed) {
  Conversation c("10.0.0.1", "10.0.0.2", 40000, 443, 0);
  test::ClientHelloSpec ch;
  ch.sni = "a.test";
  ch.supported_versions = {0x0304};
  ch.psk = true;
  test::ServerHelloSpec sh;
  sh.cipher = 0x1301;
  sh.selected_version = 0x0304;
  sh.psk = true;
  c.open().send(Direction::forward, test::tls_record(22, test::client_hello(ch)));
  c.send(Direction::backward, test::tls_record(22, test::server_hello(sh)));
  const auto hs = parse_handshake(test::single_session(c));
  ASSERT_TRUE(std::holds_alternative<ParsedHandshake>(hs));
  EXPECT_TRUE(std::get<ParsedHandshake>(hs).record.resumed);
  EXPECT_EQ(std::get<ParsedHandshake>(hs).record.tls_version, TlsVersion::tls1_3);
}

TEST(Handshake, CorruptClientHelloIsMalformedWithOffset) {
  Conversation c("10.0.0.1", "10.0.0.2", 40000, 443, 0);
  Bytes hello = test::client_hello({});
  // Claim a session id longer than the message.
  hello[4 + 34] = 0xF0;
  c.open().send(Direction::forward, test::tls_record(22, hello));
  const auto hs = parse_handshake(test::single_session(c));
  ASSERT_TRUE(std::holds_alternative<MalformedHandshake>(hs));
  EXPECT_EQ(std::get<MalformedHandshake>(hs).direction, Direction::forward);
  EXPECT_EQ(std::get<MalformedHandshake>(hs).offset, 0u);
}

TEST(Handshake, ServerOnlyGarbageRecordHeaderIsMalformed) {
  Conversation c("10.0.0.1", "10.0.0.2", 40000, 443, 0);
  c.open().send(Direction::forward, test::tls_record(22, test::client_hello({})));
  Bytes server = test::tls_record(22, test::server_hello({}));
  const std::size_t good = server.size();
  server.insert(server.end(), {0x99, 0x03, 0x03, 0, 1, 0});
  c.send(Direction::backward, server);
  const auto hs = parse_handshake(test::single_session(c));
  ASSERT_TRUE(std::holds_alternative<MalformedHandshake>(hs));
  EXPECT_EQ(std::get<MalformedHandshake>(hs).direction, Direction::backward);
  EXPECT_EQ(std::get<MalformedHandshake>(hs).offset, good);
}

TEST(Reassembly, RetransmissionsAndReorderingAreResolved) {
  Conversation c("10.0.0.1", "10.0.0.2", 40000, 443, 0);
  c.open();
  c.send(Direction::forward, Bytes{1, 2, 3});
  c.send(Direction::forward, Bytes{4, 5});
  c.send(Direction::forward, Bytes{6});
  auto packets = c.packets;
  // Retransmit the second segment and swap the last two.
  packets.push_back(packets[4]);
  packets.back().timestamp_us += 1;
  std::swap(packets[4], packets[5]);
  Session s = assemble(packets).front();
  EXPECT_EQ(reassemble_stream(s, Direction::forward), (Bytes{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(reassemble_stream(s, Direction::forward, 4), (Bytes{1, 2, 3, 4}));
  EXPECT_TRUE(reassemble_stream(s, Direction::backward).empty());
}

TEST(Reassembly, StopsAtGap) {
  Conversation c("10.0.0.1", "10.0.0.2", 40000, 443, 0);
  c.open();
  c.send(Direction::forward, Bytes{1, 2, 3});
  c.send(Direction::forward, Bytes{4, 5});
  c.send(Direction::forward, Bytes{6});
  auto packets = c.packets;
  packets.erase(packets.begin() + 4);
  EXPECT_EQ(reassemble_stream(assemble(packets).front(), Direction::forward), (Bytes{1, 2, 3}));
}

TEST(Detection, PortDoesNotMatterContentDoes) {
  const auto tls = test::tls_conversation(40000, 0, "x.test", {});
  EXPECT_TRUE(detect_tls(test::single_session(tls)).is_tls);
  Conversation plain("10.0.0.1", "10.0.0.2", 40001, 443, 0);
  plain.open().send(Direction::forward, Bytes(20, 'A'));
  EXPECT_FALSE(detect_tls(test::single_session(plain)).is_tls);
}

}  // namespace
}  // namespace etd
