#include "etd/tls_features.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "etd/error.hpp"
#include "etd/stats.hpp"

namespace etd {
namespace {

enum Fots : std::size_t {
  kClientPayloadBytes,
  kResponderClientBytesRatio,
  kCertCount,
  kTlsVersion,
  kSniInSanDns,
  kDifferSni,
  kDifferSubject,
  kMeanCertValidity,
  kCnInSanDns,
  kSanDomainCount,
  kMeanKeyBits,
  kStdKeyBits,
  kAvgSanDomains,
  kSelfSignedRatio,
  kSameIssuerRatio,
  kStdCertValidity,
  kResumed,
  kOfferedCipherCount,
  kExpiredAtCapture,
  kMinKeyBits,
  kMaxKeyBits,
  kSniPresent,
};

const std::array<std::string, kFotsSize> kNames{
    "client_payload_bytes", "responder_client_bytes_ratio",
    "cert_count",           "tls_version",
    "sni_in_san_dns",       "differ_sni",
    "differ_subject",       "mean_cert_validity",
    "cn_in_san_dns",        "san_domain_count",
    "mean_key_bits",        "std_key_bits",
    "avg_san_domains",      "self_signed_ratio",
    "same_issuer_ratio",    "std_cert_validity",
    "resumed",              "offered_cipher_count",
    "expired_at_capture",   "min_key_bits",
    "max_key_bits",         "sni_present",
};

bool any_san_matches(const X509Record& x, const std::string& host) {
  return std::any_of(x.san_dns.begin(), x.san_dns.end(),
                     [&](const std::string& san) { return hostname_matches(san, host); });
}

}  // namespace

std::span<const std::string> fots_feature_names() { return kNames; }

double FotsVector::at(std::string_view name) const {
  auto it = std::find(kNames.begin(), kNames.end(), name);
  if (it == kNames.end()) throw Error("MissingFeature", std::string(name));
  return values[static_cast<std::size_t>(it - kNames.begin())];
}

FeatureVector FotsVector::to_feature_vector() const {
  FeatureVector v;
  v.catalog_version = "etd-fots-1";
  for (std::size_t i = 0; i < kFotsSize; ++i) v.append(kNames[i], values[i]);
  return v;
}

FotsVector compute_fots(const ConnectionBundle& b) {
  FotsVector f;
  f.bundle_id = b.conn.uid;
  auto& v = f.values;
  const double client = static_cast<double>(b.conn.client_bytes);
  const double server = static_cast<double>(b.conn.server_bytes);
  v[kClientPayloadBytes] = client;
  v[kResponderClientBytesRatio] = client > 0 ? server / client : 0.0;
  if (!b.ssl) return f;

  const SslRecord& ssl = *b.ssl;
  const auto& certs = b.certs;
  const double n = static_cast<double>(certs.size());
  v[kTlsVersion] = tls_version_ordinal(ssl.tls_version);
  v[kResumed] = ssl.resumed ? 1.0 : 0.0;
  v[kOfferedCipherCount] = static_cast<double>(ssl.cipher_suites_offered.size());
  v[kSniPresent] = ssl.sni && !ssl.sni->empty() ? 1.0 : 0.0;
  v[kCertCount] = n;
  if (certs.empty()) return f;

  std::vector<double> key_bits, validity, san_counts;
  std::map<std::string, std::size_t> issuers;
  std::set<std::string> subjects;
  double self_signed = 0, cn_in_san = 0, expired = 0;
  const std::int64_t capture_s = b.conn.start_time_us / 1'000'000;
  for (const auto& x : certs) {
    key_bits.push_back(x.public_key_bits);
    validity.push_back(static_cast<double>(x.validity_s));
    san_counts.push_back(static_cast<double>(x.san_dns.size()));
    ++issuers[x.issuer];
    subjects.insert(x.subject);
    if (x.self_signed) self_signed += 1;
    if (x.subject_cn && any_san_matches(x, *x.subject_cn)) cn_in_san = 1;
    if (capture_s > x.not_after || capture_s < x.not_before) expired = 1;
  }

  if (v[kSniPresent] != 0.0) {
    const std::string& sni = *ssl.sni;
    const bool in_san = std::any_of(certs.begin(), certs.end(), [&](const X509Record& x) {
      return any_san_matches(x, sni);
    });
    const bool cn_match = std::any_of(certs.begin(), certs.end(), [&](const X509Record& x) {
      return x.subject_cn && hostname_matches(*x.subject_cn, sni);
    });
    v[kSniInSanDns] = in_san ? 1.0 : 0.0;
    v[kDifferSni] = cn_match ? 0.0 : 1.0;
  }

  // A multi-certificate bundle in which no certificate issued another one.
  if (certs.size() >= 2) {
    bool linked = false;
    for (const auto& x : certs) {
      if (!x.self_signed && subjects.contains(x.issuer)) linked = true;
    }
    v[kDifferSubject] = linked ? 0.0 : 1.0;
  }

  // Sorted so that sums do not depend on certificate order.
  std::sort(key_bits.begin(), key_bits.end());
  std::sort(validity.begin(), validity.end());
  std::sort(san_counts.begin(), san_counts.end());

  std::size_t top_issuer = 0;
  for (const auto& [issuer, count] : issuers) top_issuer = std::max(top_issuer, count);

  const Aggregate keys = aggregate(key_bits);
  const Aggregate valid = aggregate(validity);
  v[kMeanCertValidity] = valid.mean;
  v[kStdCertValidity] = valid.std;
  v[kCnInSanDns] = cn_in_san;
  v[kSanDomainCount] = std::accumulate(san_counts.begin(), san_counts.end(), 0.0);
  v[kAvgSanDomains] = mean(san_counts);
  v[kMeanKeyBits] = keys.mean;
  v[kStdKeyBits] = keys.std;
  v[kMinKeyBits] = keys.min;
  v[kMaxKeyBits] = keys.max;
  v[kSelfSignedRatio] = self_signed / n;
  v[kSameIssuerRatio] = static_cast<double>(top_issuer) / n;
  v[kExpiredAtCapture] = expired;
  return f;
}

FotsDataset fots_dataset(const std::vector<ConnectionBundle>& bundles, const std::map<std::string, int>& labels,
                         const std::string& source_dataset) {
  FotsDataset out;
  out.dataset.columns.assign(kNames.begin(), kNames.end());
  for (const auto& b : bundles) {
    if (!b.conn.is_tls()) {
      ++out.excluded_count;
      continue;
    }
    auto it = labels.find(b.conn.uid);
    if (it == labels.end()) throw Error("UnlabeledBundle", b.conn.uid);
    const FotsVector f = compute_fots(b);
    out.dataset.rows.push_back(
        LabeledRow{b.conn.uid, std::vector<double>(f.values.begin(), f.values.end()), it->second, source_dataset});
  }
  return out;
}

}  // namespace etd
