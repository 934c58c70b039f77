#include "etd/capture.hpp"

#include <array>
#include <sstream>

namespace etd {
namespace {

constexpr std::uint32_t kPcapMagicMicro = 0xA1B2C3D4;
constexpr std::uint32_t kPcapMagicNano = 0xA1B23C4D;
constexpr std::uint32_t kPcapngSectionHeader = 0x0A0D0D0A;
constexpr std::uint32_t kPcapngByteOrderMagic = 0x1A2B3C4D;

constexpr std::uint32_t kBlockInterfaceDescription = 1;
constexpr std::uint32_t kBlockObsoletePacket = 2;
constexpr std::uint32_t kBlockSimplePacket = 3;
constexpr std::uint32_t kBlockEnhancedPacket = 6;

// Frames larger than this are treated as corruption rather than allocated.
constexpr std::uint32_t kMaxBlockLength = 256u * 1024u * 1024u;

std::uint32_t byteswap32(std::uint32_t v) {
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

std::size_t pad4(std::size_t n) { return (n + 3) & ~std::size_t{3}; }

}  // namespace

LinkType link_type_from_code(std::uint32_t code) {
  switch (code & 0xFFFFu) {
    case 1:  // LINKTYPE_ETHERNET
      return LinkType::ethernet;
    case 101:  // LINKTYPE_RAW
    case 12:   // DLT_RAW on some BSDs
    case 14:
    case 228:  // LINKTYPE_IPV4
    case 229:  // LINKTYPE_IPV6
      return LinkType::raw_ip;
    default:
      return LinkType::other;
  }
}

CaptureReader::CaptureReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary), path_(path.string()) {
  if (!in_) throw Error("CannotOpen", path_);

  std::array<std::uint8_t, 4> magic{};
  if (!read_exact(magic.data(), magic.size())) {
    throw Error("UnknownMagic", path_ + ": file too short for a capture header");
  }
  const std::uint32_t le = load_le32(magic, 0);
  if (le == kPcapngSectionHeader) {
    format_ = Format::pcapng;
    std::array<std::uint8_t, 8> rest{};
    if (!read_exact(rest.data(), rest.size())) {
      throw Error("UnknownMagic", path_ + ": truncated pcapng section header");
    }
    const std::uint32_t bom = load_le32(rest, 4);
    if (bom == kPcapngByteOrderMagic) {
      swapped_ = false;
    } else if (bom == byteswap32(kPcapngByteOrderMagic)) {
      swapped_ = true;
    } else {
      throw Error("UnknownMagic", path_ + ": bad pcapng byte-order magic");
    }
    if (!read_section_header(u32(rest.data()))) {
      throw Error("UnknownMagic", path_ + ": truncated pcapng section header");
    }
    return;
  }

  format_ = Format::pcap;
  if (le == kPcapMagicMicro || le == kPcapMagicNano) {
    swapped_ = false;
    nanosecond_ = le == kPcapMagicNano;
  } else if (le == byteswap32(kPcapMagicMicro) || le == byteswap32(kPcapMagicNano)) {
    swapped_ = true;
    nanosecond_ = le == byteswap32(kPcapMagicNano);
  } else {
    throw Error("UnknownMagic", path_ + ": not a pcap or pcapng file");
  }
  std::array<std::uint8_t, 20> header{};
  if (!read_exact(header.data(), header.size())) {
    throw Error("UnknownMagic", path_ + ": truncated pcap global header");
  }
  pcap_link_code_ = u32(header.data() + 16);
}

std::uint32_t CaptureReader::u32(const std::uint8_t* p) const {
  std::uint32_t v = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                    (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
  return swapped_ ? byteswap32(v) : v;
}

std::uint16_t CaptureReader::u16(const std::uint8_t* p) const {
  auto v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  return swapped_ ? static_cast<std::uint16_t>((v >> 8) | (v << 8)) : v;
}

bool CaptureReader::read_exact(std::uint8_t* dst, std::size_t n) {
  in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  const auto got = static_cast<std::size_t>(in_.gcount());
  offset_ += got;
  return got == n;
}

void CaptureReader::mark_truncated(const std::string& what) {
  truncated_ = true;
  done_ = true;
  std::ostringstream os;
  os << path_ << ": truncated " << what << " near byte offset " << offset_;
  notice_ = os.str();
}

std::optional<RawFrame> CaptureReader::next() {
  if (done_) return std::nullopt;
  return format_ == Format::pcap ? next_pcap() : next_pcapng();
}

std::optional<RawFrame> CaptureReader::next_pcap() {
  std::array<std::uint8_t, 16> rec{};
  in_.peek();
  if (in_.eof()) {
    done_ = true;
    return std::nullopt;
  }
  if (!read_exact(rec.data(), rec.size())) {
    mark_truncated("record header");
    return std::nullopt;
  }
  const std::uint32_t sec = u32(rec.data());
  const std::uint32_t frac = u32(rec.data() + 4);
  const std::uint32_t incl = u32(rec.data() + 8);
  const std::uint32_t orig = u32(rec.data() + 12);
  if (incl > kMaxBlockLength) {
    mark_truncated("record (implausible captured length)");
    return std::nullopt;
  }
  RawFrame frame;
  frame.timestamp_us = std::int64_t{sec} * 1'000'000 + (nanosecond_ ? frac / 1000 : frac);
  frame.link_code = pcap_link_code_;
  frame.link_type = link_type_from_code(pcap_link_code_);
  frame.original_length = orig;
  frame.bytes.resize(incl);
  if (!read_exact(frame.bytes.data(), incl)) {
    mark_truncated("record body");
    return std::nullopt;
  }
  return frame;
}

bool CaptureReader::read_section_header(std::uint32_t total_length) {
  // Already consumed: type, length, byte-order magic (12 bytes).
  if (total_length < 28 || total_length > kMaxBlockLength) return false;
  interfaces_.clear();
  std::vector<std::uint8_t> rest(total_length - 12);
  return read_exact(rest.data(), rest.size());
}

std::int64_t CaptureReader::to_microseconds(const Interface& ifc, std::uint64_t ticks) const {
  const unsigned n = ifc.resolution_exponent;
  if (ifc.binary_resolution) {
    const auto scaled = static_cast<unsigned __int128>(ticks) * 1'000'000u;
    return static_cast<std::int64_t>(scaled >> n);
  }
  if (n == 6) return static_cast<std::int64_t>(ticks);
  std::uint64_t p = 1;
  if (n > 6) {
    for (unsigned i = 6; i < n && i < 25; ++i) p *= 10;
    return static_cast<std::int64_t>(ticks / p);
  }
  for (unsigned i = n; i < 6; ++i) p *= 10;
  return static_cast<std::int64_t>(ticks * p);
}

std::optional<RawFrame> CaptureReader::next_pcapng() {
  for (;;) {
    std::array<std::uint8_t, 8> head{};
    in_.peek();
    if (in_.eof()) {
      done_ = true;
      return std::nullopt;
    }
    if (!read_exact(head.data(), head.size())) {
      mark_truncated("block header");
      return std::nullopt;
    }
    const std::uint32_t raw_type = load_le32(head, 0);
    if (raw_type == kPcapngSectionHeader) {
      std::array<std::uint8_t, 4> bom{};
      if (!read_exact(bom.data(), bom.size())) {
        mark_truncated("section header");
        return std::nullopt;
      }
      const std::uint32_t b = load_le32(bom, 0);
      if (b == kPcapngByteOrderMagic) {
        swapped_ = false;
      } else if (b == byteswap32(kPcapngByteOrderMagic)) {
        swapped_ = true;
      } else {
        mark_truncated("section header (bad byte-order magic)");
        return std::nullopt;
      }
      if (!read_section_header(u32(head.data() + 4))) {
        mark_truncated("section header");
        return std::nullopt;
      }
      continue;
    }

    const std::uint32_t type = u32(head.data());
    const std::uint32_t total = u32(head.data() + 4);
    if (total < 12 || total > kMaxBlockLength || total % 4 != 0) {
      mark_truncated("block (invalid block length)");
      return std::nullopt;
    }
    std::vector<std::uint8_t> body(total - 8);
    if (!read_exact(body.data(), body.size())) {
      mark_truncated("block body");
      return std::nullopt;
    }
    const std::size_t body_len = body.size() - 4;  // minus trailing length
    const std::uint8_t* p = body.data();

    if (type == kBlockInterfaceDescription) {
      if (body_len < 8) continue;
      Interface ifc;
      ifc.link_code = u16(p);
      std::size_t pos = 8;
      while (pos + 4 <= body_len) {
        const std::uint16_t code = u16(p + pos);
        const std::uint16_t len = u16(p + pos + 2);
        pos += 4;
        if (code == 0 || pos + len > body_len) break;
        if (code == 9 && len >= 1) {  // if_tsresol
          ifc.binary_resolution = (p[pos] & 0x80) != 0;
          ifc.resolution_exponent = p[pos] & 0x7F;
        }
        pos += pad4(len);
      }
      interfaces_.push_back(ifc);
      continue;
    }

    if (type == kBlockEnhancedPacket || type == kBlockObsoletePacket) {
      const bool enhanced = type == kBlockEnhancedPacket;
      if (body_len < 20) continue;
      const std::uint32_t ifc_id = enhanced ? u32(p) : u16(p);
      const std::uint64_t ticks = (std::uint64_t{u32(p + 4)} << 32) | u32(p + 8);
      const std::uint32_t caplen = u32(p + 12);
      const std::uint32_t orig = u32(p + 16);
      if (caplen > body_len - 20) {
        mark_truncated("packet block (captured length exceeds block)");
        return std::nullopt;
      }
      Interface ifc = ifc_id < interfaces_.size() ? interfaces_[ifc_id] : Interface{};
      RawFrame frame;
      frame.timestamp_us = to_microseconds(ifc, ticks);
      frame.link_code = ifc.link_code;
      frame.link_type = link_type_from_code(ifc.link_code);
      frame.original_length = orig;
      frame.bytes.assign(p + 20, p + 20 + caplen);
      last_timestamp_us_ = frame.timestamp_us;
      return frame;
    }

    if (type == kBlockSimplePacket) {
      if (body_len < 4) continue;
      const std::uint32_t orig = u32(p);
      const std::uint32_t caplen = std::min<std::uint32_t>(orig, static_cast<std::uint32_t>(body_len - 4));
      Interface ifc = interfaces_.empty() ? Interface{} : interfaces_.front();
      RawFrame frame;
      // Simple packet blocks carry no timestamp; reuse the previous one.
      frame.timestamp_us = last_timestamp_us_;
      frame.link_code = ifc.link_code;
      frame.link_type = link_type_from_code(ifc.link_code);
      frame.original_length = orig;
      frame.bytes.assign(p + 4, p + 4 + caplen);
      return frame;
    }
    // Other block types (name resolution, statistics, custom) are skipped.
  }
}

CaptureContents open_capture(const std::filesystem::path& path) {
  CaptureReader reader(path);
  CaptureContents out;
  while (auto frame = reader.next()) out.frames.push_back(std::move(*frame));
  out.truncated = reader.truncated();
  out.truncation_notice = reader.truncation_notice();
  return out;
}

}  // namespace etd
