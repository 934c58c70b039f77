#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "etd/bytes.hpp"
#include "etd/flow.hpp"

namespace etd {

enum class TlsVersion { ssl3, tls1_0, tls1_1, tls1_2, tls1_3, unknown };

const char* to_string(TlsVersion v);
TlsVersion tls_version_from_wire(std::uint16_t wire);
// ssl3=0 ... tls1_3=4, unknown=-1.
int tls_version_ordinal(TlsVersion v);

inline constexpr std::size_t kMaxTlsRecordLength = (1u << 14) + 2048;

struct TlsDetection {
  bool is_tls = false;
  // Index into Session::packets of the first forward packet that starts a TLS record.
  std::optional<std::size_t> first_record_offset;
};

// True iff `payload` begins with a syntactically valid TLS record header.
bool looks_like_tls_record(ByteView payload);

TlsDetection detect_tls(const Session& s);

// In-order TCP payload of one direction, retransmissions skipped by sequence
// number. Stops at the first gap or once `max_bytes` have been collected.
Bytes reassemble_stream(const Session& s, Direction d, std::size_t max_bytes = 256 * 1024);

struct SslRecord {
  std::string uid;
  TlsVersion tls_version = TlsVersion::unknown;
  std::optional<std::string> sni;
  std::vector<std::uint16_t> cipher_suites_offered;
  std::optional<std::uint16_t> selected_cipher;
  std::vector<std::string> cert_chain_fuid;
  bool resumed = false;
};

struct ParsedHandshake {
  SslRecord record;  // uid left empty; cert_chain_fuid filled from `certificates`
  std::vector<Bytes> certificates;  // DER, wire order
};

struct NoHandshake {};

// `offset` is the byte offset of the offending handshake message within the
// concatenated handshake messages of `direction`.
struct MalformedHandshake {
  Direction direction = Direction::forward;
  std::size_t offset = 0;
  std::string reason;
};

using HandshakeResult = std::variant<ParsedHandshake, NoHandshake, MalformedHandshake>;

// Parses the cleartext handshake of a TLS session. Parsing stops at the first
// ChangeCipherSpec or application-data record in each direction.
HandshakeResult parse_handshake(const Session& s);

}  // namespace etd
