#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "builders.hpp"
#include "etd/capture.hpp"
#include "etd/error.hpp"

namespace etd {
namespace {

using test::data_dir;

nlohmann::json mixed_expected() {
  std::ifstream in(data_dir() / "mixed.expected.json");
  return nlohmann::json::parse(in);
}

TEST(Capture, ReadsClassicMicrosecondPcap) {
  const auto expected = mixed_expected();
  const auto c = open_capture(data_dir() / "mixed_le_us.pcap");
  ASSERT_EQ(c.frames.size(), expected.size());
  EXPECT_FALSE(c.truncated);
  for (std::size_t i = 0; i < c.frames.size(); ++i) {
    EXPECT_EQ(c.frames[i].timestamp_us, expected[i]["time_us"].get<std::int64_t>()) << i;
    EXPECT_EQ(c.frames[i].link_type, LinkType::ethernet);
  }
}

TEST(Capture, NanosecondAndPcapngMatchClassic) {
  const auto us = open_capture(data_dir() / "mixed_le_us.pcap");
  for (const char* name : {"mixed_le_ns.pcap", "mixed.pcapng"}) {
    const auto other = open_capture(data_dir() / name);
    ASSERT_EQ(other.frames.size(), us.frames.size()) << name;
    for (std::size_t i = 0; i < us.frames.size(); ++i) {
      EXPECT_EQ(other.frames[i].bytes, us.frames[i].bytes) << name << " frame " << i;
      EXPECT_EQ(other.frames[i].timestamp_us, us.frames[i].timestamp_us) << name << " frame " << i;
    }
  }
}

std::vector<RawFrame> sample_frames() {
  std::vector<RawFrame> frames;
  for (int i = 0; i < 5; ++i) {
    test::TcpSpec s;
    s.sport = static_cast<std::uint16_t>(1000 + i);
    s.payload = Bytes(static_cast<std::size_t>(i * 7), 0xAB);
    frames.push_back(test::frame(1'600'000'000'000'000 + i * 1'234'567, test::tcp_frame(s)));
  }
  return frames;
}

TEST(Capture, AllByteOrderAndResolutionVariantsRoundTrip) {
  const auto frames = sample_frames();
  const auto dir = test::temp_dir("capture_variants");
  for (bool big : {false, true}) {
    for (bool nano : {false, true}) {
      const auto p = dir / ("v" + std::to_string(big) + std::to_string(nano) + ".pcap");
      test::write_pcap(p, frames, {nano, big, 1, 65535});
      const auto c = open_capture(p);
      ASSERT_EQ(c.frames.size(), frames.size());
      for (std::size_t i = 0; i < frames.size(); ++i) {
        EXPECT_EQ(c.frames[i].bytes, frames[i].bytes);
        EXPECT_EQ(c.frames[i].timestamp_us, frames[i].timestamp_us);
        EXPECT_EQ(c.frames[i].original_length, frames[i].bytes.size());
      }
    }
    const auto png = dir / ("v" + std::to_string(big) + ".pcapng");
    test::write_pcapng(png, frames, 9, big);
    const auto c = open_capture(png);
    ASSERT_EQ(c.frames.size(), frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) EXPECT_EQ(c.frames[i].timestamp_us, frames[i].timestamp_us);
  }
}

TEST(Capture, PcapngMillisecondResolutionScalesTicks) {
  std::vector<RawFrame> frames = sample_frames();
  for (auto& f : frames) f.timestamp_us = f.timestamp_us / 1000 * 1000;
  const auto p = test::temp_dir("capture_ms") / "ms.pcapng";
  test::write_pcapng(p, frames, 3);
  const auto c = open_capture(p);
  for (std::size_t i = 0; i < frames.size(); ++i) EXPECT_EQ(c.frames[i].timestamp_us, frames[i].timestamp_us);
}

TEST(Capture, TruncatedTailKeepsCompleteFrames) {
  const auto frames = sample_frames();
  const auto p = test::temp_dir("capture_trunc") / "t.pcap";
  test::write_pcap(p, frames);
  const auto size = std::filesystem::file_size(p);
  std::filesystem::resize_file(p, size - 3);
  const auto c = open_capture(p);
  EXPECT_TRUE(c.truncated);
  EXPECT_FALSE(c.truncation_notice.empty());
  EXPECT_EQ(c.frames.size(), frames.size() - 1);
}

TEST(Capture, HeaderOnlyPcapHasNoFrames) {
  const auto p = test::temp_dir("capture_empty") / "e.pcap";
  test::write_pcap(p, {});
  const auto c = open_capture(p);
  EXPECT_TRUE(c.frames.empty());
  EXPECT_FALSE(c.truncated);
}

TEST(Capture, UnknownMagicRejected) {
  const auto p = test::temp_dir("capture_magic") / "junk.bin";
  std::ofstream(p) << "definitely not a capture file";
  try {
    open_capture(p);
    FAIL() << "expected UnknownMagic";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "UnknownMagic");
  }
}

TEST(Capture, MissingFileIsAnError) {
  EXPECT_THROW(open_capture("/nonexistent/file.pcap"), Error);
}

TEST(Capture, LinkTypeCodes) {
  EXPECT_EQ(link_type_from_code(1), LinkType::ethernet);
  EXPECT_EQ(link_type_from_code(101), LinkType::raw_ip);
  EXPECT_EQ(link_type_from_code(228), LinkType::raw_ip);
  EXPECT_EQ(link_type_from_code(113), LinkType::other);
}

}  // namespace
}  // namespace etd
