#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "etd/bytes.hpp"
#include "etd/error.hpp"

namespace etd {

enum class LinkType { ethernet, raw_ip, other };

// One frame as stored in the capture file.
struct RawFrame {
  std::int64_t timestamp_us = 0;
  LinkType link_type = LinkType::other;
  std::uint32_t link_code = 0;  // LINKTYPE_* value from the file
  std::uint32_t original_length = 0;
  Bytes bytes;
};

LinkType link_type_from_code(std::uint32_t code);

// Streaming reader for classic PCAP (micro- and nanosecond, either byte order)
// and PCAPNG. Throws Error{"UnknownMagic"} from the constructor when the file
// is not a capture. A truncated tail ends the stream and sets truncated().
class CaptureReader {
 public:
  explicit CaptureReader(const std::filesystem::path& path);

  std::optional<RawFrame> next();

  bool truncated() const { return truncated_; }
  const std::string& truncation_notice() const { return notice_; }
  // Byte offset of the next unread record.
  std::uint64_t offset() const { return offset_; }

 private:
  enum class Format { pcap, pcapng };

  struct Interface {
    std::uint32_t link_code = 0;
    // Timestamp units per second, expressed as (base, exponent): 10^n or 2^n.
    bool binary_resolution = false;
    std::uint8_t resolution_exponent = 6;
  };

  bool read_exact(std::uint8_t* dst, std::size_t n);
  void mark_truncated(const std::string& what);
  std::optional<RawFrame> next_pcap();
  std::optional<RawFrame> next_pcapng();
  bool read_section_header(std::uint32_t block_total_length_raw);
  std::uint32_t u32(const std::uint8_t* p) const;
  std::uint16_t u16(const std::uint8_t* p) const;
  std::int64_t to_microseconds(const Interface& ifc, std::uint64_t ticks) const;

  std::ifstream in_;
  std::string path_;
  Format format_ = Format::pcap;
  bool swapped_ = false;     // multi-byte fields are big-endian
  bool nanosecond_ = false;  // classic pcap nanosecond variant
  std::uint32_t pcap_link_code_ = 0;
  std::vector<Interface> interfaces_;
  std::int64_t last_timestamp_us_ = 0;
  std::uint64_t offset_ = 0;
  bool truncated_ = false;
  bool done_ = false;
  std::string notice_;
};

struct CaptureContents {
  std::vector<RawFrame> frames;
  bool truncated = false;
  std::string truncation_notice;
};

// Reads every frame of a capture in file order.
CaptureContents open_capture(const std::filesystem::path& path);

}  // namespace etd
