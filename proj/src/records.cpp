#include "etd/records.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "etd/error.hpp"

namespace etd {
namespace {

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\':
        out += "\\\\";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\n':
        out += "\\n";
        break;
      default:
        out.push_back(c);
    }
  }
  return out.empty() ? "(empty)" : out;
}

std::string unescape(const std::string& s) {
  if (s == "(empty)") return {};
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[++i];
      out.push_back(n == 't' ? '\t' : n == 'n' ? '\n' : n);
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& fmt) {
  if (xs.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out.push_back(',');
    out += fmt(xs[i]);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  if (s == "-") return {};
  return split(s, ',');
}

// Reads header + rows; returns rows as column-name -> value maps.
std::vector<std::unordered_map<std::string, std::string>> read_table(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split(line, '\t');
  std::vector<std::unordered_map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, '\t');
    if (cells.size() != header.size()) {
      throw Error("BadLog", std::string(what) + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                                std::to_string(header.size()));
    }
    std::unordered_map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = std::move(cells[i]);
    rows.push_back(std::move(row));
  }
  return rows;
}

const std::string& cell(const std::unordered_map<std::string, std::string>& row, const std::string& name) {
  auto it = row.find(name);
  if (it == row.end()) throw Error("BadLog", "missing column " + name);
  return it->second;
}

Endpoint parse_endpoint(const std::string& host, const std::string& port) {
  auto addr = IpAddress::parse(host);
  if (!addr) throw Error("BadLog", "bad address " + host);
  return Endpoint{*addr, static_cast<std::uint16_t>(std::stoul(port))};
}

TlsVersion parse_version(const std::string& s) {
  for (auto v : {TlsVersion::ssl3, TlsVersion::tls1_0, TlsVersion::tls1_1, TlsVersion::tls1_2, TlsVersion::tls1_3}) {
    if (s == to_string(v)) return v;
  }
  return TlsVersion::unknown;
}

}  // namespace

ConnRecord make_conn_record(const Session& s, std::string uid, bool is_tls) {
  ConnRecord c;
  c.uid = std::move(uid);
  c.start_time_us = s.start_time_us;
  c.client = s.initiator;
  c.server = s.responder;
  c.protocol = s.key.protocol;
  c.service = is_tls ? "ssl" : "";
  c.duration_s = static_cast<double>(s.end_time_us - s.start_time_us) / 1e6;
  for (const auto& sp : s.packets) {
    if (sp.direction == Direction::forward) {
      c.client_bytes += sp.packet.payload_length();
      ++c.client_packets;
    } else {
      c.server_bytes += sp.packet.payload_length();
      ++c.server_packets;
    }
  }
  return c;
}

std::vector<ConnectionBundle> link_records(const std::vector<ConnRecord>& conns, const std::vector<SslRecord>& ssls,
                                           const std::vector<X509Record>& certs) {
  std::set<std::string> conn_uids;
  for (const auto& c : conns) {
    if (!conn_uids.insert(c.uid).second) throw Error("DuplicateUid", "conn uid " + c.uid);
  }
  std::unordered_map<std::string, const SslRecord*> ssl_by_uid;
  for (const auto& s : ssls) {
    if (!ssl_by_uid.emplace(s.uid, &s).second) throw Error("DuplicateUid", "ssl uid " + s.uid);
  }
  std::unordered_map<std::string, const X509Record*> cert_by_fuid;
  for (const auto& x : certs) cert_by_fuid.emplace(x.fuid, &x);

  std::vector<ConnectionBundle> out;
  out.reserve(conns.size());
  for (const auto& c : conns) {
    ConnectionBundle b;
    b.conn = c;
    if (auto it = ssl_by_uid.find(c.uid); it != ssl_by_uid.end()) {
      b.ssl = *it->second;
      for (const auto& fuid : b.ssl->cert_chain_fuid) {
        if (auto ct = cert_by_fuid.find(fuid); ct != cert_by_fuid.end()) {
          b.certs.push_back(*ct->second);
        } else {
          b.missing_fuids.push_back(fuid);
        }
      }
    }
    out.push_back(std::move(b));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.conn.uid < b.conn.uid; });
  return out;
}

std::string CertificateStore::insert(ByteView der) {
  std::string fuid = certificate_fuid(der);
  {
    std::lock_guard lock(mutex_);
    if (entries_.contains(fuid)) return fuid;
  }
  auto parsed = parse_certificate(der);
  std::lock_guard lock(mutex_);
  entries_.try_emplace(fuid, std::move(parsed));
  return fuid;
}

std::optional<X509Record> CertificateStore::find(const std::string& fuid) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(fuid);
  if (it == entries_.end()) return std::nullopt;
  if (const auto* rec = std::get_if<X509Record>(&it->second)) return *rec;
  return std::nullopt;
}

std::vector<X509Record> CertificateStore::records() const {
  std::lock_guard lock(mutex_);
  std::vector<X509Record> out;
  for (const auto& [fuid, result] : entries_) {
    if (const auto* rec = std::get_if<X509Record>(&result)) out.push_back(*rec);
  }
  return out;
}

std::size_t CertificateStore::bad_count() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [](const auto& e) {
    return std::holds_alternative<BadCertificate>(e.second);
  }));
}

SessionInspection inspect_session(const Session& s, const std::string& uid, CertificateStore& store) {
  SessionInspection out;
  out.detection = detect_tls(s);
  out.conn = make_conn_record(s, uid, out.detection.is_tls);
  if (!out.detection.is_tls) return out;
  auto result = parse_handshake(s);
  if (auto* parsed = std::get_if<ParsedHandshake>(&result)) {
    for (const auto& der : parsed->certificates) store.insert(der);
    parsed->record.uid = uid;
    out.ssl = std::move(parsed->record);
  } else if (auto* bad = std::get_if<MalformedHandshake>(&result)) {
    out.malformed = *bad;
  }
  return out;
}

std::string make_uid(std::size_t capture_index, std::size_t session_index) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "C%04zu-%08zu", capture_index, session_index);
  return buf;
}

void write_conn_log(std::ostream& out, const std::vector<ConnRecord>& conns) {
  out << "uid\tts_us\torig_h\torig_p\tresp_h\tresp_p\tproto\tservice\tduration\torig_bytes\tresp_bytes\torig_pkts\t"
         "resp_pkts\n";
  for (const auto& c : conns) {
    char dur[64];
    std::snprintf(dur, sizeof dur, "%.6f", c.duration_s);
    out << c.uid << '\t' << c.start_time_us << '\t' << c.client.addr.to_string() << '\t' << c.client.port << '\t'
        << c.server.addr.to_string() << '\t' << c.server.port << '\t' << int{c.protocol} << '\t'
        << (c.service.empty() ? "-" : c.service) << '\t' << dur << '\t' << c.client_bytes << '\t' << c.server_bytes
        << '\t' << c.client_packets << '\t' << c.server_packets << '\n';
  }
}

void write_ssl_log(std::ostream& out, const std::vector<SslRecord>& ssls) {
  out << "uid\tversion\tserver_name\tcipher_suites\tcipher\tresumed\tcert_chain_fuids\n";
  for (const auto& s : ssls) {
    out << s.uid << '\t' << to_string(s.tls_version) << '\t' << (s.sni ? escape(*s.sni) : "-") << '\t'
        << join(s.cipher_suites_offered, [](std::uint16_t c) { return std::to_string(c); }) << '\t'
        << (s.selected_cipher ? std::to_string(*s.selected_cipher) : "-") << '\t' << (s.resumed ? "T" : "F") << '\t'
        << join(s.cert_chain_fuid, [](const std::string& f) { return f; }) << '\n';
  }
}

void write_x509_log(std::ostream& out, const std::vector<X509Record>& certs) {
  out << "fuid\tnot_before\tnot_after\tvalidity_s\tsubject\tissuer\tsubject_cn\tsan_dns\tkey_bits\tself_signed\n";
  for (const auto& x : certs) {
    out << x.fuid << '\t' << x.not_before << '\t' << x.not_after << '\t' << x.validity_s << '\t' << escape(x.subject)
        << '\t' << escape(x.issuer) << '\t' << (x.subject_cn ? escape(*x.subject_cn) : "-") << '\t'
        << join(x.san_dns, [](const std::string& d) { return escape(d); }) << '\t' << x.public_key_bits << '\t'
        << (x.self_signed ? "T" : "F") << '\n';
  }
}

std::vector<ConnRecord> read_conn_log(std::istream& in) {
  std::vector<ConnRecord> out;
  for (const auto& row : read_table(in, "conn log")) {
    ConnRecord c;
    c.uid = cell(row, "uid");
    c.start_time_us = std::stoll(cell(row, "ts_us"));
    c.client = parse_endpoint(cell(row, "orig_h"), cell(row, "orig_p"));
    c.server = parse_endpoint(cell(row, "resp_h"), cell(row, "resp_p"));
    c.protocol = static_cast<std::uint8_t>(std::stoul(cell(row, "proto")));
    c.service = cell(row, "service") == "-" ? "" : cell(row, "service");
    c.duration_s = std::stod(cell(row, "duration"));
    c.client_bytes = std::stoull(cell(row, "orig_bytes"));
    c.server_bytes = std::stoull(cell(row, "resp_bytes"));
    c.client_packets = std::stoull(cell(row, "orig_pkts"));
    c.server_packets = std::stoull(cell(row, "resp_pkts"));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<SslRecord> read_ssl_log(std::istream& in) {
  std::vector<SslRecord> out;
  for (const auto& row : read_table(in, "ssl log")) {
    SslRecord s;
    s.uid = cell(row, "uid");
    s.tls_version = parse_version(cell(row, "version"));
    if (cell(row, "server_name") != "-") s.sni = unescape(cell(row, "server_name"));
    for (const auto& c : split_list(cell(row, "cipher_suites"))) {
      s.cipher_suites_offered.push_back(static_cast<std::uint16_t>(std::stoul(c)));
    }
    if (cell(row, "cipher") != "-") s.selected_cipher = static_cast<std::uint16_t>(std::stoul(cell(row, "cipher")));
    s.resumed = cell(row, "resumed") == "T";
    s.cert_chain_fuid = split_list(cell(row, "cert_chain_fuids"));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<X509Record> read_x509_log(std::istream& in) {
  std::vector<X509Record> out;
  for (const auto& row : read_table(in, "x509 log")) {
    X509Record x;
    x.fuid = cell(row, "fuid");
    x.not_before = std::stoll(cell(row, "not_before"));
    x.not_after = std::stoll(cell(row, "not_after"));
    x.validity_s = std::stoll(cell(row, "validity_s"));
    x.subject = unescape(cell(row, "subject"));
    x.issuer = unescape(cell(row, "issuer"));
    if (cell(row, "subject_cn") != "-") x.subject_cn = unescape(cell(row, "subject_cn"));
    for (const auto& d : split_list(cell(row, "san_dns"))) x.san_dns.push_back(unescape(d));
    x.public_key_bits = std::stoi(cell(row, "key_bits"));
    x.self_signed = cell(row, "self_signed") == "T";
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace etd
