#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>

#include "etd/bytes.hpp"
#include "etd/capture.hpp"

namespace etd {

// IPv4 addresses are stored as IPv4-mapped IPv6 (::ffff:a.b.c.d) so both
// families share one ordered type.
struct IpAddress {
  std::array<std::uint8_t, 16> bytes{};

  static IpAddress v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d);
  static IpAddress v4(ByteView four);
  static IpAddress v6(ByteView sixteen);
  static std::optional<IpAddress> parse(const std::string& text);

  bool is_v4() const;
  std::string to_string() const;

  auto operator<=>(const IpAddress&) const = default;
};

namespace tcp_flag {
inline constexpr std::uint8_t fin = 0x01;
inline constexpr std::uint8_t syn = 0x02;
inline constexpr std::uint8_t rst = 0x04;
inline constexpr std::uint8_t psh = 0x08;
inline constexpr std::uint8_t ack = 0x10;
inline constexpr std::uint8_t urg = 0x20;
}  // namespace tcp_flag

struct IpHeader {
  IpAddress src_addr;
  IpAddress dst_addr;
  std::uint8_t protocol = 0;
  std::uint32_t total_length = 0;
  std::uint32_t header_length = 0;
  std::uint8_t ttl = 0;
};

struct TcpHeader {
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint32_t seq = 0;
  std::uint8_t flags = 0;
  std::uint16_t window = 0;
  std::uint32_t header_length = 0;
  std::uint32_t payload_length = 0;

  bool has(std::uint8_t flag) const { return (flags & flag) != 0; }
};

struct UdpHeader {
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint32_t payload_length = 0;
};

struct DecodedPacket {
  std::int64_t timestamp_us = 0;
  LinkType link_type = LinkType::ethernet;
  IpHeader ip;
  std::optional<TcpHeader> tcp;
  std::optional<UdpHeader> udp;
  Bytes payload;

  bool has_ports() const { return tcp.has_value() || udp.has_value(); }
  std::uint16_t src_port() const { return tcp ? tcp->src_port : udp ? udp->src_port : 0; }
  std::uint16_t dst_port() const { return tcp ? tcp->dst_port : udp ? udp->dst_port : 0; }
  std::uint32_t payload_length() const {
    return tcp ? tcp->payload_length : udp ? udp->payload_length : 0;
  }
};

enum class DecodeLayer { link, network, transport };

struct Undecodable {
  DecodeLayer layer = DecodeLayer::link;
  std::string reason;
  std::optional<std::uint16_t> ethertype;
};

using DecodeResult = std::variant<DecodedPacket, Undecodable>;

DecodeResult decode_packet(const RawFrame& frame);

enum class NetProtocol { arp, icmp, icmpv6, igmp };

enum class TransportRequirement { tcp_only, tcp_udp };

struct FilterPolicy {
  std::set<NetProtocol> drop_protocols{NetProtocol::arp, NetProtocol::icmp, NetProtocol::icmpv6};
  TransportRequirement require_transport = TransportRequirement::tcp_only;
  bool drop_malformed = true;
};

enum class DropReason { protocol, malformed, transport };

struct FilterVerdict {
  bool keep = false;
  DropReason reason = DropReason::protocol;  // meaningful only when !keep

  static FilterVerdict kept() { return {true, DropReason::protocol}; }
  static FilterVerdict dropped(DropReason r) { return {false, r}; }
};

FilterVerdict filter_packet(const DecodeResult& p, const FilterPolicy& policy = {});

const char* to_string(DropReason r);
const char* to_string(DecodeLayer l);

}  // namespace etd
