#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "etd/bytes.hpp"

namespace etd {

struct X509Record {
  std::string fuid;
  std::int64_t not_before = 0;  // seconds since epoch
  std::int64_t not_after = 0;
  std::int64_t validity_s = 0;
  std::vector<std::string> san_dns;
  std::optional<std::string> subject_cn;
  std::string issuer;
  std::string subject;
  int public_key_bits = 0;
  bool self_signed = false;
};

struct BadCertificate {
  std::string reason;
};

using CertificateResult = std::variant<X509Record, BadCertificate>;

// Certificate id: hex SHA-256 of the DER encoding, truncated to 32 characters
// and prefixed with 'F'. Identical certificates share an id.
std::string certificate_fuid(ByteView der);

CertificateResult parse_certificate(ByteView der);

// Hostname match with single left-most-label wildcard support ("*.example.com"
// matches "a.example.com" but not "example.com" or "a.b.example.com").
// Case-insensitive; a trailing dot on either side is ignored.
bool hostname_matches(const std::string& pattern, const std::string& host);

}  // namespace etd
