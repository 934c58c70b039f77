#include "etd/packet.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cstring>

namespace etd {
namespace {

constexpr std::uint16_t kEthertypeIpv4 = 0x0800;
constexpr std::uint16_t kEthertypeArp = 0x0806;
constexpr std::uint16_t kEthertypeVlan = 0x8100;
constexpr std::uint16_t kEthertypeQinQ = 0x88A8;
constexpr std::uint16_t kEthertypeIpv6 = 0x86DD;

constexpr std::uint8_t kProtoIcmp = 1;
constexpr std::uint8_t kProtoIgmp = 2;
constexpr std::uint8_t kProtoTcp = 6;
constexpr std::uint8_t kProtoUdp = 17;
constexpr std::uint8_t kProtoIcmpv6 = 58;

Undecodable fail(DecodeLayer layer, std::string reason, std::optional<std::uint16_t> ethertype = {}) {
  return Undecodable{layer, std::move(reason), ethertype};
}

// Decodes the transport header that starts at `l4` (ip.header_length bytes
// into the IP datagram). `ip_bytes` is bounded by ip.total_length.
DecodeResult decode_transport(DecodedPacket pkt, ByteView ip_bytes) {
  const auto l4 = ip_bytes.subspan(pkt.ip.header_length);
  if (pkt.ip.protocol == kProtoTcp) {
    if (l4.size() < 20) return fail(DecodeLayer::transport, "tcp header truncated");
    TcpHeader tcp;
    tcp.src_port = load_be16(l4, 0);
    tcp.dst_port = load_be16(l4, 2);
    tcp.seq = load_be32(l4, 4);
    tcp.header_length = static_cast<std::uint32_t>(l4[12] >> 4) * 4;
    tcp.flags = l4[13] & 0x3F;
    tcp.window = load_be16(l4, 14);
    if (tcp.header_length < 20 || tcp.header_length > l4.size()) {
      return fail(DecodeLayer::transport, "bad tcp data offset");
    }
    tcp.payload_length = static_cast<std::uint32_t>(l4.size()) - tcp.header_length;
    auto payload = l4.subspan(tcp.header_length);
    pkt.payload.assign(payload.begin(), payload.end());
    pkt.tcp = tcp;
    return pkt;
  }
  if (pkt.ip.protocol == kProtoUdp) {
    if (l4.size() < 8) return fail(DecodeLayer::transport, "udp header truncated");
    UdpHeader udp;
    udp.src_port = load_be16(l4, 0);
    udp.dst_port = load_be16(l4, 2);
    udp.payload_length = static_cast<std::uint32_t>(l4.size()) - 8;
    auto payload = l4.subspan(8);
    pkt.payload.assign(payload.begin(), payload.end());
    pkt.udp = udp;
    return pkt;
  }
  return pkt;
}

DecodeResult decode_ipv4(ByteView data, std::int64_t ts, LinkType link) {
  if (data.size() < 20) return fail(DecodeLayer::network, "ipv4 header truncated", kEthertypeIpv4);
  if ((data[0] >> 4) != 4) return fail(DecodeLayer::network, "ip version mismatch", kEthertypeIpv4);
  DecodedPacket pkt;
  pkt.timestamp_us = ts;
  pkt.link_type = link;
  pkt.ip.header_length = std::uint32_t{data[0] & 0x0Fu} * 4;
  pkt.ip.total_length = load_be16(data, 2);
  pkt.ip.ttl = data[8];
  pkt.ip.protocol = data[9];
  pkt.ip.src_addr = IpAddress::v4(data.subspan(12, 4));
  pkt.ip.dst_addr = IpAddress::v4(data.subspan(16, 4));
  if (pkt.ip.header_length < 20 || pkt.ip.total_length < pkt.ip.header_length) {
    return fail(DecodeLayer::network, "bad ipv4 lengths", kEthertypeIpv4);
  }
  if (pkt.ip.total_length > data.size()) {
    return fail(DecodeLayer::network, "ipv4 datagram truncated by capture", kEthertypeIpv4);
  }
  const std::uint16_t frag = load_be16(data, 6);
  if ((frag & 0x2000) != 0 || (frag & 0x1FFF) != 0) {
    return fail(DecodeLayer::network, "ip fragment", kEthertypeIpv4);
  }
  const auto datagram = data.first(pkt.ip.total_length);
  return decode_transport(std::move(pkt), datagram);
}

DecodeResult decode_ipv6(ByteView data, std::int64_t ts, LinkType link) {
  if (data.size() < 40) return fail(DecodeLayer::network, "ipv6 header truncated", kEthertypeIpv6);
  if ((data[0] >> 4) != 6) return fail(DecodeLayer::network, "ip version mismatch", kEthertypeIpv6);
  DecodedPacket pkt;
  pkt.timestamp_us = ts;
  pkt.link_type = link;
  pkt.ip.total_length = 40u + load_be16(data, 4);
  pkt.ip.ttl = data[7];
  pkt.ip.src_addr = IpAddress::v6(data.subspan(8, 16));
  pkt.ip.dst_addr = IpAddress::v6(data.subspan(24, 16));
  if (pkt.ip.total_length > data.size()) {
    return fail(DecodeLayer::network, "ipv6 datagram truncated by capture", kEthertypeIpv6);
  }
  std::uint8_t next = data[6];
  std::uint32_t offset = 40;
  for (;;) {
    if (next == 0 || next == 43 || next == 60) {  // hop-by-hop, routing, destination options
      if (offset + 8 > pkt.ip.total_length) {
        return fail(DecodeLayer::network, "ipv6 extension header truncated", kEthertypeIpv6);
      }
      const std::uint8_t following = data[offset];
      offset += (std::uint32_t{data[offset + 1]} + 1) * 8;
      next = following;
      continue;
    }
    if (next == 44) return fail(DecodeLayer::network, "ip fragment", kEthertypeIpv6);
    break;
  }
  if (offset > pkt.ip.total_length) {
    return fail(DecodeLayer::network, "ipv6 extension header overruns datagram", kEthertypeIpv6);
  }
  pkt.ip.header_length = offset;
  pkt.ip.protocol = next;
  const auto datagram = data.first(pkt.ip.total_length);
  return decode_transport(std::move(pkt), datagram);
}

DecodeResult decode_network(ByteView data, std::uint16_t ethertype, std::int64_t ts, LinkType link) {
  switch (ethertype) {
    case kEthertypeIpv4:
      return decode_ipv4(data, ts, link);
    case kEthertypeIpv6:
      return decode_ipv6(data, ts, link);
    case kEthertypeArp:
      return fail(DecodeLayer::network, "arp", ethertype);
    default:
      return fail(DecodeLayer::network, "non-ip ethertype", ethertype);
  }
}

}  // namespace

IpAddress IpAddress::v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
  IpAddress ip;
  ip.bytes[10] = 0xFF;
  ip.bytes[11] = 0xFF;
  ip.bytes[12] = a;
  ip.bytes[13] = b;
  ip.bytes[14] = c;
  ip.bytes[15] = d;
  return ip;
}

IpAddress IpAddress::v4(ByteView four) { return v4(four[0], four[1], four[2], four[3]); }

IpAddress IpAddress::v6(ByteView sixteen) {
  IpAddress ip;
  std::copy_n(sixteen.begin(), 16, ip.bytes.begin());
  return ip;
}

std::optional<IpAddress> IpAddress::parse(const std::string& text) {
  std::uint8_t buf[16];
  if (inet_pton(AF_INET, text.c_str(), buf) == 1) return v4(ByteView(buf, 4));
  if (inet_pton(AF_INET6, text.c_str(), buf) == 1) return v6(ByteView(buf, 16));
  return std::nullopt;
}

bool IpAddress::is_v4() const {
  for (int i = 0; i < 10; ++i) {
    if (bytes[i] != 0) return false;
  }
  return bytes[10] == 0xFF && bytes[11] == 0xFF;
}

std::string IpAddress::to_string() const {
  char buf[INET6_ADDRSTRLEN];
  if (is_v4()) {
    inet_ntop(AF_INET, bytes.data() + 12, buf, sizeof buf);
  } else {
    inet_ntop(AF_INET6, bytes.data(), buf, sizeof buf);
  }
  return buf;
}

DecodeResult decode_packet(const RawFrame& frame) {
  ByteView data(frame.bytes);
  switch (frame.link_type) {
    case LinkType::ethernet: {
      if (data.size() < 14) return fail(DecodeLayer::link, "ethernet header truncated");
      std::size_t offset = 12;
      std::uint16_t ethertype = load_be16(data, offset);
      offset += 2;
      while (ethertype == kEthertypeVlan || ethertype == kEthertypeQinQ) {
        if (data.size() < offset + 4) return fail(DecodeLayer::link, "vlan tag truncated");
        ethertype = load_be16(data, offset + 2);
        offset += 4;
      }
      return decode_network(data.subspan(offset), ethertype, frame.timestamp_us, frame.link_type);
    }
    case LinkType::raw_ip: {
      if (data.empty()) return fail(DecodeLayer::network, "empty frame");
      const int version = data[0] >> 4;
      if (version == 4) return decode_ipv4(data, frame.timestamp_us, frame.link_type);
      if (version == 6) return decode_ipv6(data, frame.timestamp_us, frame.link_type);
      return fail(DecodeLayer::network, "raw frame is not ip");
    }
    case LinkType::other:
      break;
  }
  return fail(DecodeLayer::link, "unsupported link type " + std::to_string(frame.link_code));
}

FilterVerdict filter_packet(const DecodeResult& p, const FilterPolicy& policy) {
  if (const auto* bad = std::get_if<Undecodable>(&p)) {
    if (bad->ethertype == kEthertypeArp && policy.drop_protocols.contains(NetProtocol::arp)) {
      return FilterVerdict::dropped(DropReason::protocol);
    }
    return FilterVerdict::dropped(policy.drop_malformed ? DropReason::malformed : DropReason::transport);
  }
  const auto& pkt = std::get<DecodedPacket>(p);
  const auto proto = pkt.ip.protocol;
  if ((proto == kProtoIcmp && policy.drop_protocols.contains(NetProtocol::icmp)) ||
      (proto == kProtoIcmpv6 && policy.drop_protocols.contains(NetProtocol::icmpv6)) ||
      (proto == kProtoIgmp && policy.drop_protocols.contains(NetProtocol::igmp))) {
    return FilterVerdict::dropped(DropReason::protocol);
  }
  const bool transport_ok = pkt.tcp.has_value() ||
                            (policy.require_transport == TransportRequirement::tcp_udp && pkt.udp.has_value());
  if (!transport_ok) return FilterVerdict::dropped(DropReason::transport);
  return FilterVerdict::kept();
}

const char* to_string(DropReason r) {
  switch (r) {
    case DropReason::protocol:
      return "protocol";
    case DropReason::malformed:
      return "malformed";
    case DropReason::transport:
      return "transport";
  }
  return "?";
}

const char* to_string(DecodeLayer l) {
  switch (l) {
    case DecodeLayer::link:
      return "link";
    case DecodeLayer::network:
      return "network";
    case DecodeLayer::transport:
      return "transport";
  }
  return "?";
}

}  // namespace etd
