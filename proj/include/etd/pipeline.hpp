#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "etd/dataset.hpp"
#include "etd/flow.hpp"
#include "etd/packet.hpp"
#include "etd/records.hpp"

namespace etd {

struct ExtractOptions {
  std::size_t window_size = kDefaultWindowSize;
  bool encrypted_only = true;
  int label = 0;
  std::string source;
  // Per-session labels keyed by session_id; sessions absent here use `label`.
  std::map<std::string, int> session_labels;
  FilterPolicy filter;
  AssemblerConfig assembler;
  std::size_t threads = 1;
};

struct CaptureStats {
  std::string path;
  std::size_t frames = 0;
  std::size_t kept_packets = 0;
  std::map<std::string, std::size_t> dropped;  // by drop reason
  std::size_t sessions = 0;
  std::size_t tls_sessions = 0;
  std::size_t malformed_handshakes = 0;
  std::optional<std::string> truncation_notice;
};

struct ExtractResult {
  Dataset dataset;
  std::vector<CaptureStats> captures;
  std::vector<ConnRecord> conns;
  std::vector<SslRecord> ssls;
  std::vector<X509Record> certs;
  std::vector<std::string> session_json;  // one line per assembled session
  std::size_t bad_certificates = 0;
};

// FULL catalog columns for `window_size` followed by the FOTS block.
std::vector<std::string> extract_columns(std::size_t window_size = kDefaultWindowSize);

// capture -> decode -> filter -> sessions -> TLS inspection -> features.
// Rows follow input order, then session start time. Session ids come from
// make_uid(capture index, session index). Errors name the failing file.
ExtractResult extract_features(const std::vector<std::filesystem::path>& captures, const ExtractOptions& options);

}  // namespace etd
