#include "etd/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace etd {

std::string Endpoint::to_string() const {
  if (addr.is_v4()) return addr.to_string() + ":" + std::to_string(port);
  return "[" + addr.to_string() + "]:" + std::to_string(port);
}

std::string FlowKey::to_string() const {
  return endpoint_a.to_string() + "<->" + endpoint_b.to_string() + "/" + std::to_string(protocol);
}

std::size_t FlowKeyHash::operator()(const FlowKey& k) const noexcept {
  // FNV-1a over the canonical fields.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint8_t b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  for (auto b : k.endpoint_a.addr.bytes) mix(b);
  mix(static_cast<std::uint8_t>(k.endpoint_a.port >> 8));
  mix(static_cast<std::uint8_t>(k.endpoint_a.port));
  for (auto b : k.endpoint_b.addr.bytes) mix(b);
  mix(static_cast<std::uint8_t>(k.endpoint_b.port >> 8));
  mix(static_cast<std::uint8_t>(k.endpoint_b.port));
  mix(k.protocol);
  return static_cast<std::size_t>(h);
}

FlowKey flow_key(const DecodedPacket& p) {
  Endpoint src{p.ip.src_addr, p.src_port()};
  Endpoint dst{p.ip.dst_addr, p.dst_port()};
  if (dst < src) std::swap(src, dst);
  return FlowKey{src, dst, p.ip.protocol};
}

const char* to_string(CloseReason r) {
  switch (r) {
    case CloseReason::fin:
      return "fin";
    case CloseReason::rst:
      return "rst";
    case CloseReason::timeout:
      return "timeout";
    case CloseReason::end_of_capture:
      return "end_of_capture";
  }
  return "?";
}

std::size_t Session::count(Direction d) const {
  return static_cast<std::size_t>(
      std::count_if(packets.begin(), packets.end(), [d](const SessionPacket& sp) { return sp.direction == d; }));
}

FlowAssembler::FlowAssembler(AssemblerConfig config)
    : config_(config), timeout_us_(static_cast<std::int64_t>(std::llround(config.idle_timeout_s * 1e6))) {}

void FlowAssembler::close(OpenFlow& flow, CloseReason reason) {
  flow.session.close_reason = reason;
  closed_.emplace_back(flow.sequence, std::move(flow.session));
}

void FlowAssembler::expire_idle(std::int64_t now_us) {
  for (auto it = open_.begin(); it != open_.end();) {
    if (now_us - it->second.session.end_time_us > timeout_us_) {
      auto& flow = it->second;
      CloseReason reason = CloseReason::timeout;
      if (flow.complete) reason = flow.session.close_reason;
      close(flow, reason);
      it = open_.erase(it);
    } else {
      ++it;
    }
  }
}

void FlowAssembler::add(DecodedPacket packet) {
  if (!packet.has_ports()) return;
  const FlowKey key = flow_key(packet);
  const std::int64_t ts = packet.timestamp_us;

  if (++added_since_sweep_ >= 65536) {
    added_since_sweep_ = 0;
    expire_idle(ts);
  }

  auto it = open_.find(key);
  if (it != open_.end()) {
    auto& flow = it->second;
    const bool idle = ts - flow.session.end_time_us > timeout_us_;
    const bool restart = flow.complete && packet.tcp && packet.tcp->has(tcp_flag::syn);
    if (idle || restart) {
      close(flow, flow.complete ? flow.session.close_reason : CloseReason::timeout);
      open_.erase(it);
      it = open_.end();
    }
  }

  if (it == open_.end()) {
    OpenFlow flow;
    flow.sequence = next_sequence_++;
    flow.session.key = key;
    flow.session.initiator = Endpoint{packet.ip.src_addr, packet.src_port()};
    flow.session.responder = Endpoint{packet.ip.dst_addr, packet.dst_port()};
    flow.session.start_time_us = ts;
    it = open_.emplace(key, std::move(flow)).first;
  }

  auto& flow = it->second;
  const Endpoint src{packet.ip.src_addr, packet.src_port()};
  const Direction dir = src == flow.session.initiator ? Direction::forward : Direction::backward;
  flow.session.end_time_us = ts;
  if (packet.tcp && !flow.complete) {
    if (packet.tcp->has(tcp_flag::rst)) {
      flow.complete = true;
      flow.session.close_reason = CloseReason::rst;
    } else if (packet.tcp->has(tcp_flag::fin)) {
      (dir == Direction::forward ? flow.fin_forward : flow.fin_backward) = true;
      if (flow.fin_forward && flow.fin_backward) {
        flow.complete = true;
        flow.session.close_reason = CloseReason::fin;
      }
    }
  }
  flow.session.packets.push_back(SessionPacket{std::move(packet), dir});
}

std::vector<Session> FlowAssembler::finish() {
  for (auto& [key, flow] : open_) {
    close(flow, flow.complete ? flow.session.close_reason : CloseReason::end_of_capture);
  }
  open_.clear();
  std::sort(closed_.begin(), closed_.end(), [](const auto& a, const auto& b) {
    if (a.second.start_time_us != b.second.start_time_us) return a.second.start_time_us < b.second.start_time_us;
    return a.first < b.first;
  });
  std::vector<Session> out;
  out.reserve(closed_.size());
  for (auto& [seq, s] : closed_) out.push_back(std::move(s));
  closed_.clear();
  return out;
}

std::vector<Session> assemble(std::vector<DecodedPacket> packets, AssemblerConfig config) {
  std::stable_sort(packets.begin(), packets.end(),
                   [](const DecodedPacket& a, const DecodedPacket& b) { return a.timestamp_us < b.timestamp_us; });
  FlowAssembler assembler(config);
  for (auto& p : packets) assembler.add(std::move(p));
  return assembler.finish();
}

FixedSession truncate_pad(const Session& s, std::size_t window_size) {
  if (window_size < 1) throw std::invalid_argument("window_size must be >= 1");
  FixedSession out;
  out.key = s.key;
  out.rows.resize(window_size);
  const std::size_t real = std::min(window_size, s.packets.size());
  for (std::size_t i = 0; i < real; ++i) {
    const auto& sp = s.packets[i];
    auto& row = out.rows[i];
    row.padding = false;
    row.timestamp_us = sp.packet.timestamp_us;
    row.ip_length = sp.packet.ip.total_length;
    row.ip_header_length = sp.packet.ip.header_length;
    row.payload_length = sp.packet.payload_length();
    row.direction = sp.direction;
  }
  out.pad_count = window_size - real;
  return out;
}

std::string session_summary_json(const Session& s, const std::string& session_id) {
  nlohmann::ordered_json j;
  j["session_id"] = session_id;
  j["key"] = s.key.to_string();
  j["initiator"] = s.initiator.to_string();
  j["responder"] = s.responder.to_string();
  j["packets"] = s.packets.size();
  j["forward_packets"] = s.count(Direction::forward);
  j["backward_packets"] = s.count(Direction::backward);
  j["start_time_us"] = s.start_time_us;
  j["end_time_us"] = s.end_time_us;
  j["close_reason"] = to_string(s.close_reason);
  return j.dump();
}

}  // namespace etd
