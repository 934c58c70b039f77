#include "etd/x509.hpp"

#include <openssl/bio.h>
#include <openssl/evp.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include <algorithm>
#include <cctype>
#include <ctime>
#include <memory>

#include "etd/digest.hpp"

namespace etd {
namespace {

struct X509Deleter {
  void operator()(X509* p) const { X509_free(p); }
};
struct BioDeleter {
  void operator()(BIO* p) const { BIO_free(p); }
};
struct NamesDeleter {
  void operator()(GENERAL_NAMES* p) const { GENERAL_NAMES_free(p); }
};

std::optional<std::int64_t> to_epoch(const ASN1_TIME* t) {
  if (t == nullptr) return std::nullopt;
  std::tm tm{};
  if (ASN1_TIME_to_tm(t, &tm) != 1) return std::nullopt;
  return static_cast<std::int64_t>(timegm(&tm));
}

std::string name_to_string(const X509_NAME* name) {
  std::unique_ptr<BIO, BioDeleter> bio(BIO_new(BIO_s_mem()));
  X509_NAME_print_ex(bio.get(), name, 0, XN_FLAG_RFC2253);
  char* data = nullptr;
  const long len = BIO_get_mem_data(bio.get(), &data);
  return len > 0 ? std::string(data, static_cast<std::size_t>(len)) : std::string{};
}

std::optional<std::string> common_name(const X509_NAME* name) {
  const int idx = X509_NAME_get_index_by_NID(name, NID_commonName, -1);
  if (idx < 0) return std::nullopt;
  const ASN1_STRING* data = X509_NAME_ENTRY_get_data(X509_NAME_get_entry(name, idx));
  unsigned char* utf8 = nullptr;
  const int len = ASN1_STRING_to_UTF8(&utf8, data);
  if (len < 0) return std::nullopt;
  std::string out(reinterpret_cast<char*>(utf8), static_cast<std::size_t>(len));
  OPENSSL_free(utf8);
  return out;
}

std::string normalize_host(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

std::string certificate_fuid(ByteView der) { return "F" + sha256_hex(der).substr(0, 32); }

CertificateResult parse_certificate(ByteView der) {
  if (der.empty()) return BadCertificate{"empty DER"};
  const unsigned char* p = der.data();
  std::unique_ptr<X509, X509Deleter> cert(d2i_X509(nullptr, &p, static_cast<long>(der.size())));
  if (!cert) return BadCertificate{"DER does not decode as an X.509 certificate"};
  if (p != der.data() + der.size()) return BadCertificate{"trailing bytes after certificate"};

  X509Record rec;
  rec.fuid = certificate_fuid(der);
  const auto nb = to_epoch(X509_get0_notBefore(cert.get()));
  const auto na = to_epoch(X509_get0_notAfter(cert.get()));
  if (!nb || !na) return BadCertificate{"unreadable validity period"};
  rec.not_before = *nb;
  rec.not_after = *na;
  rec.validity_s = rec.not_after - rec.not_before;

  const X509_NAME* subject = X509_get_subject_name(cert.get());
  const X509_NAME* issuer = X509_get_issuer_name(cert.get());
  rec.subject = name_to_string(subject);
  rec.issuer = name_to_string(issuer);
  rec.subject_cn = common_name(subject);
  rec.self_signed = rec.subject == rec.issuer;

  std::unique_ptr<GENERAL_NAMES, NamesDeleter> names(
      static_cast<GENERAL_NAMES*>(X509_get_ext_d2i(cert.get(), NID_subject_alt_name, nullptr, nullptr)));
  if (names) {
    for (int i = 0; i < sk_GENERAL_NAME_num(names.get()); ++i) {
      const GENERAL_NAME* gn = sk_GENERAL_NAME_value(names.get(), i);
      if (gn->type != GEN_DNS) continue;
      const ASN1_IA5STRING* dns = gn->d.dNSName;
      rec.san_dns.emplace_back(reinterpret_cast<const char*>(ASN1_STRING_get0_data(dns)),
                               static_cast<std::size_t>(ASN1_STRING_length(dns)));
    }
  }

  if (EVP_PKEY* key = X509_get0_pubkey(cert.get())) rec.public_key_bits = EVP_PKEY_get_bits(key);
  return rec;
}

bool hostname_matches(const std::string& pattern, const std::string& host) {
  const std::string pat = normalize_host(pattern);
  const std::string h = normalize_host(host);
  if (pat.empty() || h.empty()) return false;
  if (pat.size() > 2 && pat[0] == '*' && pat[1] == '.') {
    const auto dot = h.find('.');
    if (dot == std::string::npos || dot == 0) return false;
    return h.substr(dot + 1) == pat.substr(2);
  }
  return pat == h;
}

}  // namespace etd
