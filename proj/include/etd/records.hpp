#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "etd/flow.hpp"
#include "etd/tls.hpp"
#include "etd/x509.hpp"

namespace etd {

// Connection summary in the style of a conn log. Byte counts are transport
// payload bytes; the client is the session initiator.
struct ConnRecord {
  std::string uid;
  std::int64_t start_time_us = 0;
  Endpoint client;
  Endpoint server;
  std::uint8_t protocol = 6;
  std::string service;  // "ssl" for TLS-detected sessions, else empty
  double duration_s = 0.0;
  std::uint64_t client_bytes = 0;
  std::uint64_t server_bytes = 0;
  std::uint64_t client_packets = 0;
  std::uint64_t server_packets = 0;

  bool is_tls() const { return service == "ssl"; }
};

ConnRecord make_conn_record(const Session& s, std::string uid, bool is_tls);

struct ConnectionBundle {
  ConnRecord conn;
  std::optional<SslRecord> ssl;
  std::vector<X509Record> certs;           // resolved, in cert_chain_fuid order
  std::vector<std::string> missing_fuids;  // referenced but not resolvable
};

// Joins conn -> ssl by uid and ssl -> x509 by cert_chain_fuid. One bundle per
// conn, sorted by uid. Throws Error{"DuplicateUid"} on repeated conn or ssl uids.
std::vector<ConnectionBundle> link_records(const std::vector<ConnRecord>& conns,
                                           const std::vector<SslRecord>& ssls,
                                           const std::vector<X509Record>& certs);

// Insert-if-absent table of parsed certificates keyed by fuid. Safe for
// concurrent use from several inspectors.
class CertificateStore {
 public:
  // Parses `der` the first time its fuid is seen. Returns the fuid.
  std::string insert(ByteView der);

  std::optional<X509Record> find(const std::string& fuid) const;
  // Parsed certificates ordered by fuid; bad certificates are omitted.
  std::vector<X509Record> records() const;
  std::size_t bad_count() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, CertificateResult> entries_;
};

struct SessionInspection {
  ConnRecord conn;
  TlsDetection detection;
  std::optional<SslRecord> ssl;
  std::optional<MalformedHandshake> malformed;
};

// Detects TLS, parses the handshake and registers certificates in `store`.
SessionInspection inspect_session(const Session& s, const std::string& uid, CertificateStore& store);

// Zero-padded run-unique connection id.
std::string make_uid(std::size_t capture_index, std::size_t session_index);

// Tab-separated exports. First line is the column header; lists are
// comma-joined; absent values are "-".
void write_conn_log(std::ostream& out, const std::vector<ConnRecord>& conns);
void write_ssl_log(std::ostream& out, const std::vector<SslRecord>& ssls);
void write_x509_log(std::ostream& out, const std::vector<X509Record>& certs);

std::vector<ConnRecord> read_conn_log(std::istream& in);
std::vector<SslRecord> read_ssl_log(std::istream& in);
std::vector<X509Record> read_x509_log(std::istream& in);

}  // namespace etd
