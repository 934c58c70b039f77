#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "etd/packet.hpp"

namespace etd {

struct Endpoint {
  IpAddress addr;
  std::uint16_t port = 0;

  auto operator<=>(const Endpoint&) const = default;
  std::string to_string() const;
};

// Canonical bidirectional 5-tuple: endpoint_a <= endpoint_b.
struct FlowKey {
  Endpoint endpoint_a;
  Endpoint endpoint_b;
  std::uint8_t protocol = 0;

  auto operator<=>(const FlowKey&) const = default;
  std::string to_string() const;
};

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& k) const noexcept;
};

// Requires p.has_ports().
FlowKey flow_key(const DecodedPacket& p);

enum class Direction { forward, backward };

enum class CloseReason { fin, rst, timeout, end_of_capture };

const char* to_string(CloseReason r);

struct SessionPacket {
  DecodedPacket packet;
  Direction direction = Direction::forward;
};

struct Session {
  FlowKey key;
  Endpoint initiator;
  Endpoint responder;
  std::vector<SessionPacket> packets;
  std::int64_t start_time_us = 0;
  std::int64_t end_time_us = 0;
  CloseReason close_reason = CloseReason::end_of_capture;

  std::size_t count(Direction d) const;
};

struct AssemblerConfig {
  double idle_timeout_s = 300.0;
};

// Single-writer open-flow table. Feed packets in non-decreasing timestamp
// order, then call finish() once.
class FlowAssembler {
 public:
  explicit FlowAssembler(AssemblerConfig config = {});

  void add(DecodedPacket packet);
  std::vector<Session> finish();

 private:
  struct OpenFlow {
    Session session;
    std::uint64_t sequence = 0;
    bool fin_forward = false;
    bool fin_backward = false;
    bool complete = false;  // FIN from both sides, or RST
  };

  void close(OpenFlow& flow, CloseReason reason);
  void expire_idle(std::int64_t now_us);

  AssemblerConfig config_;
  std::int64_t timeout_us_;
  std::unordered_map<FlowKey, OpenFlow, FlowKeyHash> open_;
  std::vector<std::pair<std::uint64_t, Session>> closed_;
  std::uint64_t next_sequence_ = 0;
  std::uint64_t added_since_sweep_ = 0;
};

// Stable-sorts by timestamp, then assembles. Packets without ports are ignored
// (the relevance filter removes them first).
std::vector<Session> assemble(std::vector<DecodedPacket> packets, AssemblerConfig config = {});

// Per-packet record of the fixed window. Pad rows have padding=true and zero fields.
struct PacketRow {
  bool padding = true;
  std::int64_t timestamp_us = 0;
  std::uint32_t ip_length = 0;
  std::uint32_t ip_header_length = 0;
  std::uint32_t payload_length = 0;
  Direction direction = Direction::forward;
};

struct FixedSession {
  FlowKey key;
  std::vector<PacketRow> rows;
  std::size_t pad_count = 0;

  std::size_t real_count() const { return rows.size() - pad_count; }
};

inline constexpr std::size_t kDefaultWindowSize = 15;

FixedSession truncate_pad(const Session& s, std::size_t window_size = kDefaultWindowSize);

// One JSON object (single line) describing a session.
std::string session_summary_json(const Session& s, const std::string& session_id);

}  // namespace etd
