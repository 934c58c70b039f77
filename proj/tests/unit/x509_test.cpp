#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "builders.hpp"
#include "etd/x509.hpp"

namespace etd {
namespace {

TEST(Certificate, GeneratedSelfSignedEchoesParameters) {
  test::CertSpec spec;
  spec.cn = "test.local";
  spec.san_dns = {"test.local"};
  spec.key_bits = 2048;
  spec.not_before = 1700000000;
  spec.not_after = spec.not_before + 30 * 86400;
  const auto cert = test::make_cert(spec);
  const auto r = parse_certificate(cert.der);
  ASSERT_TRUE(std::holds_alternative<X509Record>(r));
  const auto& x = std::get<X509Record>(r);
  EXPECT_EQ(x.validity_s, 2'592'000);
  EXPECT_EQ(x.not_after - x.not_before, x.validity_s);
  EXPECT_EQ(x.san_dns, std::vector<std::string>{"test.local"});
  EXPECT_EQ(x.subject_cn.value_or(""), "test.local");
  EXPECT_EQ(x.public_key_bits, 2048);
  EXPECT_TRUE(x.self_signed);
  EXPECT_EQ(x.fuid, certificate_fuid(cert.der));
}

TEST(Certificate, MatchesReferenceToolFields) {
  std::ifstream in(test::data_dir() / "ten_sessions.expected.json");
  const auto expected = nlohmann::json::parse(in)["certificates"];
  for (const auto& [name, e] : expected.items()) {
    SCOPED_TRACE(name);
    const auto der = test::read_file(test::data_dir() / ("cert_" + name + ".der"));
    const auto r = parse_certificate(der);
    ASSERT_TRUE(std::holds_alternative<X509Record>(r));
    const auto& x = std::get<X509Record>(r);
    EXPECT_EQ(x.fuid, e["fuid"].get<std::string>());
    EXPECT_EQ(x.subject_cn.value_or(""), e["subject_cn"].get<std::string>());
    EXPECT_EQ(x.san_dns, e["san_dns"].get<std::vector<std::string>>());
    EXPECT_EQ(x.not_before, e["not_before"].get<std::int64_t>());
    EXPECT_EQ(x.not_after, e["not_after"].get<std::int64_t>());
    EXPECT_EQ(x.validity_s, e["validity_s"].get<std::int64_t>());
    EXPECT_EQ(x.public_key_bits, e["public_key_bits"].get<int>());
    EXPECT_EQ(x.self_signed, e["self_signed"].get<bool>());
  }
}

TEST(Certificate, IssuedCertificateIsNotSelfSigned) {
  test::CertSpec ca_spec;
  ca_spec.cn = "Root";
  const auto ca = test::make_cert(ca_spec);
  test::CertSpec leaf_spec;
  leaf_spec.cn = "leaf.test";
  const auto leaf = test::make_cert(leaf_spec, &ca);
  const auto x = std::get<X509Record>(parse_certificate(leaf.der));
  EXPECT_FALSE(x.self_signed);
  EXPECT_NE(x.issuer, x.subject);
  EXPECT_NE(x.issuer.find("Root"), std::string::npos);
  EXPECT_TRUE(x.san_dns.empty());
}

TEST(Certificate, TruncatedOrPaddedDerIsBad) {
  test::CertSpec spec;
  spec.cn = "x";
  auto der = test::make_cert(spec).der;
  Bytes truncated(der.begin(), der.end() - 10);
  EXPECT_TRUE(std::holds_alternative<BadCertificate>(parse_certificate(truncated)));
  Bytes padded = der;
  padded.push_back(0);
  EXPECT_TRUE(std::holds_alternative<BadCertificate>(parse_certificate(padded)));
  EXPECT_TRUE(std::holds_alternative<BadCertificate>(parse_certificate(Bytes{})));
}

TEST(Certificate, FuidShape) {
  const auto id = certificate_fuid(Bytes{1, 2, 3});
  ASSERT_EQ(id.size(), 33u);
  EXPECT_EQ(id[0], 'F');
  // sha256(01 02 03)
  EXPECT_EQ(id.substr(1), "039058c6f2c0cb492c533b0a4d14ef77");
}

TEST(Hostname, WildcardRules) {
  EXPECT_TRUE(hostname_matches("example.com", "EXAMPLE.com."));
  EXPECT_TRUE(hostname_matches("*.example.com", "a.example.com"));
  EXPECT_FALSE(hostname_matches("*.example.com", "example.com"));
  EXPECT_FALSE(hostname_matches("*.example.com", "a.b.example.com"));
  EXPECT_FALSE(hostname_matches("a.*.com", "a.b.com"));
  EXPECT_FALSE(hostname_matches("example.com", "example.org"));
}

}  // namespace
}  // namespace etd
