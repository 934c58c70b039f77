#include "etd/tls.hpp"

#include <algorithm>
#include <map>

#include "etd/x509.hpp"

namespace etd {
namespace {

constexpr std::uint8_t kContentChangeCipherSpec = 20;
constexpr std::uint8_t kContentHandshake = 22;
constexpr std::uint8_t kContentApplicationData = 23;

constexpr std::uint8_t kClientHello = 1;
constexpr std::uint8_t kServerHello = 2;
constexpr std::uint8_t kCertificate = 11;

constexpr std::uint16_t kExtServerName = 0;
constexpr std::uint16_t kExtPreSharedKey = 41;
constexpr std::uint16_t kExtSupportedVersions = 43;

struct HandshakeStream {
  Bytes messages;  // concatenated handshake-record fragments
};

// Walks TLS records and collects handshake fragments up to the first
// ChangeCipherSpec / application-data record. Incomplete trailing records end
// the walk silently; a record announcing an impossible length is malformed.
std::optional<std::size_t> collect_handshake(ByteView stream, HandshakeStream& out) {
  std::size_t pos = 0;
  while (stream.size() - pos >= 5) {
    const std::uint8_t type = stream[pos];
    const std::uint16_t length = load_be16(stream, pos + 3);
    if (type < kContentChangeCipherSpec || type > kContentApplicationData || stream[pos + 1] != 0x03 ||
        length > kMaxTlsRecordLength) {
      return pos;
    }
    if (type == kContentChangeCipherSpec || type == kContentApplicationData) break;
    if (stream.size() - pos - 5 < length) break;
    if (type == kContentHandshake) {
      auto fragment = stream.subspan(pos + 5, length);
      out.messages.insert(out.messages.end(), fragment.begin(), fragment.end());
    }
    pos += 5 + length;
  }
  return std::nullopt;
}

struct Hello {
  bool present = false;
  std::uint16_t legacy_version = 0;
  Bytes session_id;
  std::vector<std::uint16_t> ciphers;
  std::optional<std::string> sni;
  std::optional<std::uint16_t> supported_version;  // ServerHello only
  bool pre_shared_key = false;
};

bool parse_sni(ByteView ext, std::optional<std::string>& sni) {
  ByteReader r(ext);
  const std::uint16_t list_len = r.u16();
  auto list = r.take(list_len);
  if (!r.ok()) return false;
  ByteReader lr(list);
  while (lr.remaining() > 0) {
    const std::uint8_t name_type = lr.u8();
    const std::uint16_t len = lr.u16();
    auto name = lr.take(len);
    if (!lr.ok()) return false;
    if (name_type == 0 && !sni) sni = std::string(name.begin(), name.end());
  }
  return true;
}

bool parse_hello(ByteView body, bool client, Hello& h) {
  ByteReader r(body);
  h.present = true;
  h.legacy_version = r.u16();
  r.skip(32);
  const std::uint8_t sid_len = r.u8();
  auto sid = r.take(sid_len);
  h.session_id.assign(sid.begin(), sid.end());
  if (client) {
    const std::uint16_t cs_len = r.u16();
    auto cs = r.take(cs_len);
    if (!r.ok() || cs_len % 2 != 0) return false;
    for (std::size_t i = 0; i < cs.size(); i += 2) h.ciphers.push_back(load_be16(cs, i));
    const std::uint8_t comp_len = r.u8();
    r.skip(comp_len);
  } else {
    h.ciphers.push_back(r.u16());
    r.skip(1);
  }
  if (!r.ok()) return false;
  if (r.remaining() == 0) return true;  // no extensions block
  const std::uint16_t ext_len = r.u16();
  auto exts = r.take(ext_len);
  if (!r.ok()) return false;
  ByteReader er(exts);
  while (er.remaining() > 0) {
    const std::uint16_t type = er.u16();
    const std::uint16_t len = er.u16();
    auto data = er.take(len);
    if (!er.ok()) return false;
    if (client && type == kExtServerName) {
      if (!parse_sni(data, h.sni)) return false;
    } else if (!client && type == kExtSupportedVersions) {
      if (data.size() != 2) return false;
      h.supported_version = load_be16(data, 0);
    } else if (!client && type == kExtPreSharedKey) {
      h.pre_shared_key = true;
    }
  }
  return true;
}

bool parse_certificate_list(ByteView body, std::vector<Bytes>& out) {
  ByteReader r(body);
  const std::uint32_t list_len = r.u24();
  auto list = r.take(list_len);
  if (!r.ok()) return false;
  ByteReader lr(list);
  while (lr.remaining() > 0) {
    const std::uint32_t len = lr.u24();
    auto der = lr.take(len);
    if (!lr.ok()) return false;
    out.emplace_back(der.begin(), der.end());
  }
  return true;
}


}  // namespace

const char* to_string(TlsVersion v) {
  switch (v) {
    case TlsVersion::ssl3:
      return "ssl3";
    case TlsVersion::tls1_0:
      return "tls1_0";
    case TlsVersion::tls1_1:
      return "tls1_1";
    case TlsVersion::tls1_2:
      return "tls1_2";
    case TlsVersion::tls1_3:
      return "tls1_3";
    case TlsVersion::unknown:
      return "unknown";
  }
  return "unknown";
}

TlsVersion tls_version_from_wire(std::uint16_t wire) {
  switch (wire) {
    case 0x0300:
      return TlsVersion::ssl3;
    case 0x0301:
      return TlsVersion::tls1_0;
    case 0x0302:
      return TlsVersion::tls1_1;
    case 0x0303:
      return TlsVersion::tls1_2;
    case 0x0304:
      return TlsVersion::tls1_3;
    default:
      return TlsVersion::unknown;
  }
}

int tls_version_ordinal(TlsVersion v) {
  switch (v) {
    case TlsVersion::ssl3:
      return 0;
    case TlsVersion::tls1_0:
      return 1;
    case TlsVersion::tls1_1:
      return 2;
    case TlsVersion::tls1_2:
      return 3;
    case TlsVersion::tls1_3:
      return 4;
    case TlsVersion::unknown:
      return -1;
  }
  return -1;
}

bool looks_like_tls_record(ByteView payload) {
  if (payload.size() < 5) return false;
  const std::uint8_t type = payload[0];
  if (type < kContentChangeCipherSpec || type > kContentApplicationData) return false;
  if (payload[1] != 0x03 || payload[2] > 0x04) return false;
  return load_be16(payload, 3) <= kMaxTlsRecordLength;
}

TlsDetection detect_tls(const Session& s) {
  TlsDetection out;
  if (s.key.protocol != 6) return out;
  for (std::size_t i = 0; i < s.packets.size(); ++i) {
    const auto& sp = s.packets[i];
    if (sp.direction != Direction::forward || !sp.packet.tcp) continue;
    if (looks_like_tls_record(sp.packet.payload)) {
      out.is_tls = true;
      out.first_record_offset = i;
      break;
    }
  }
  return out;
}

Bytes reassemble_stream(const Session& s, Direction d, std::size_t max_bytes) {
  struct Segment {
    std::int64_t rel = 0;
    std::size_t order = 0;
    const Bytes* data = nullptr;
  };
  std::vector<Segment> segments;
  std::optional<std::uint32_t> base;
  for (std::size_t i = 0; i < s.packets.size(); ++i) {
    const auto& sp = s.packets[i];
    if (sp.direction != d || !sp.packet.tcp || sp.packet.payload.empty()) continue;
    if (!base) base = sp.packet.tcp->seq;
    const auto diff = static_cast<std::int32_t>(sp.packet.tcp->seq - *base);
    segments.push_back(Segment{diff, i, &sp.packet.payload});
  }
  if (segments.empty()) return {};
  // A reordered earlier segment moves the stream origin back.
  const std::int64_t origin =
      std::min_element(segments.begin(), segments.end(), [](const auto& a, const auto& b) { return a.rel < b.rel; })
          ->rel;
  std::stable_sort(segments.begin(), segments.end(), [](const auto& a, const auto& b) { return a.rel < b.rel; });

  Bytes out;
  std::int64_t expected = 0;
  for (const auto& seg : segments) {
    const std::int64_t rel = seg.rel - origin;
    const std::int64_t end = rel + static_cast<std::int64_t>(seg.data->size());
    if (rel > expected) break;  // gap: missing bytes
    if (end <= expected) continue;  // retransmission
    const auto skip = static_cast<std::size_t>(expected - rel);
    out.insert(out.end(), seg.data->begin() + static_cast<std::ptrdiff_t>(skip), seg.data->end());
    expected = end;
    if (out.size() >= max_bytes) {
      out.resize(max_bytes);
      break;
    }
  }
  return out;
}

HandshakeResult parse_handshake(const Session& s) {
  HandshakeStream client_hs;
  HandshakeStream server_hs;
  const Bytes client_stream = reassemble_stream(s, Direction::forward);
  const Bytes server_stream = reassemble_stream(s, Direction::backward);
  if (auto bad = collect_handshake(client_stream, client_hs)) {
    return MalformedHandshake{Direction::forward, *bad, "invalid record header"};
  }
  if (auto bad = collect_handshake(server_stream, server_hs)) {
    return MalformedHandshake{Direction::backward, *bad, "invalid record header"};
  }

  Hello client_hello;
  Hello server_hello;
  std::vector<Bytes> certificates;
  bool saw_certificate = false;

  auto walk = [&](const Bytes& messages, Direction dir) -> std::optional<MalformedHandshake> {
    ByteView view(messages);
    std::size_t pos = 0;
    while (view.size() - pos >= 4) {
      const std::uint8_t type = view[pos];
      const std::uint32_t len = load_be24(view, pos + 1);
      if (view.size() - pos - 4 < len) break;  // message continues past the capture
      auto body = view.subspan(pos + 4, len);
      bool ok = true;
      if (dir == Direction::forward && type == kClientHello && !client_hello.present) {
        ok = parse_hello(body, true, client_hello);
      } else if (dir == Direction::backward && type == kServerHello) {
        server_hello = Hello{};
        ok = parse_hello(body, false, server_hello);
      } else if (dir == Direction::backward && type == kCertificate && !saw_certificate) {
        saw_certificate = true;
        ok = parse_certificate_list(body, certificates);
      }
      if (!ok) return MalformedHandshake{dir, pos, "handshake message " + std::to_string(type) + " does not parse"};
      pos += 4 + len;
    }
    return std::nullopt;
  };
  if (auto bad = walk(client_hs.messages, Direction::forward)) return *bad;
  if (auto bad = walk(server_hs.messages, Direction::backward)) return *bad;

  if (!client_hello.present && !server_hello.present) return NoHandshake{};

  ParsedHandshake out;
  auto& rec = out.record;
  rec.sni = client_hello.sni;
  rec.cipher_suites_offered = client_hello.ciphers;
  if (server_hello.present) {
    rec.tls_version = tls_version_from_wire(server_hello.supported_version.value_or(server_hello.legacy_version));
    rec.selected_cipher = server_hello.ciphers.front();
    if (rec.tls_version == TlsVersion::tls1_3) {
      rec.resumed = server_hello.pre_shared_key;
    } else {
      rec.resumed = !server_hello.session_id.empty() && server_hello.session_id == client_hello.session_id;
    }
  }
  for (const auto& der : certificates) rec.cert_chain_fuid.push_back(certificate_fuid(der));
  out.certificates = std::move(certificates);
  return out;
}

}  // namespace etd
