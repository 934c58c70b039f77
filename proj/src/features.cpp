#include "etd/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>

#include "etd/error.hpp"
#include "etd/stats.hpp"
#include "etd/tls_features.hpp"

namespace etd {
namespace {

enum class Which { all, forward, backward };

struct Series {
  const char* name;
  const char* description;
};

// Per-packet value series aggregated with min/max/mean/median/std.
constexpr std::array<Series, 19> kSeries{{
    {"ip_length", "IP total length of every packet"},
    {"fwd_ip_length", "IP total length of forward packets"},
    {"bwd_ip_length", "IP total length of backward packets"},
    {"tcp_payload", "transport payload length of every packet"},
    {"fwd_tcp_payload", "transport payload length of forward packets"},
    {"bwd_tcp_payload", "transport payload length of backward packets"},
    {"ip_header_length", "IP header length of every packet"},
    {"fwd_ip_header_length", "IP header length of forward packets"},
    {"bwd_ip_header_length", "IP header length of backward packets"},
    {"tcp_window", "TCP window field of every TCP packet"},
    {"fwd_tcp_window", "TCP window field of forward TCP packets"},
    {"bwd_tcp_window", "TCP window field of backward TCP packets"},
    {"ttl", "IP TTL / hop limit of every packet"},
    {"fwd_ttl", "IP TTL / hop limit of forward packets"},
    {"bwd_ttl", "IP TTL / hop limit of backward packets"},
    {"tcp_header_length", "TCP header length of every TCP packet"},
    {"time_diff", "seconds between consecutive packets of the session"},
    {"fwd_iat", "seconds between consecutive forward packets"},
    {"bwd_iat", "seconds between consecutive backward packets"},
}};

constexpr std::array<const char*, 5> kAggregates{"min", "max", "mean", "median", "std"};

struct Scalar {
  const char* name;
  const char* description;
};

constexpr std::array<Scalar, 25> kScalars{{
    {"flow_duration", "seconds from first to last packet"},
    {"fwd_duration", "seconds from first to last forward packet (0 with < 2 forward packets)"},
    {"bwd_duration", "seconds from first to last backward packet (0 with < 2 backward packets)"},
    {"total_payload", "sum of transport payload lengths, both directions"},
    {"total_fwd_payload", "sum of forward transport payload lengths"},
    {"total_bwd_payload", "sum of backward transport payload lengths"},
    {"total_ip_bytes", "sum of IP total lengths, both directions"},
    {"total_fwd_ip_bytes", "sum of forward IP total lengths"},
    {"total_bwd_ip_bytes", "sum of backward IP total lengths"},
    {"packet_count", "number of packets"},
    {"fwd_packet_count", "number of forward packets"},
    {"bwd_packet_count", "number of backward packets"},
    {"ipratio", "max IP length / min IP length"},
    {"goodput", "total_ip_bytes / flow_duration (0 when flow_duration is 0)"},
    {"source_port", "initiator port"},
    {"destination_port", "responder port"},
    {"syn_count", "packets with SYN set"},
    {"ack_count", "packets with ACK set"},
    {"fin_count", "packets with FIN set"},
    {"rst_count", "packets with RST set"},
    {"psh_count", "packets with PSH set"},
    {"urg_count", "packets with URG set"},
    {"bwd_fwd_packet_ratio", "bwd_packet_count / fwd_packet_count"},
    {"bwd_fwd_byte_ratio", "total_bwd_ip_bytes / total_fwd_ip_bytes"},
    {"window_change_count", "changes of the TCP window value between consecutive same-direction packets"},
}};

constexpr std::array<Scalar, 5> kPacketEntries{{
    {"pkt_ip_length", "IP total length of window slot k (0 for padding)"},
    {"pkt_tcp_payload_length", "transport payload length of window slot k"},
    {"pkt_payload_ratio", "payload length / IP length of window slot k"},
    {"pkt_ratio_to_previous", "IP length / previous IP length (1.0 for the first packet)"},
    {"pkt_time_delta", "seconds since the previous packet (0 for the first packet)"},
}};

const std::vector<std::string> kFos{
    "mean_tcp_window", "source_port",       "max_fwd_iat",       "max_bwd_iat",    "flow_duration",
    "std_bwd_iat",     "total_fwd_payload", "std_ip_length",     "max_time_diff",  "std_fwd_ip_length",
    "max_tcp_payload", "mean_ttl",          "std_ttl",           "fwd_duration"};

const std::vector<std::string> kTop10{
    "mean_tcp_window", "source_port",       "mean_ip_header_length", "max_fwd_iat",  "mean_bwd_ip_header_length",
    "max_bwd_iat",     "std_bwd_ip_length", "flow_duration",         "bwd_duration", "total_payload"};

const std::vector<std::string> kSideChannel{"pkt_ip_length", "pkt_tcp_payload_length", "pkt_payload_ratio",
                                            "pkt_ratio_to_previous", "pkt_time_delta"};

const std::vector<std::string> kTamperResistant{"flow_duration",   "total_fwd_payload",  "min_tcp_payload",
                                                "mean_tcp_payload", "median_tcp_payload", "std_ip_length",
                                                "ipratio",          "goodput"};

const std::vector<std::string> kTimeBased{"source_port", "max_fwd_iat",   "max_bwd_iat",   "flow_duration",
                                          "destination_port", "std_time_diff", "min_time_diff", "std_bwd_iat",
                                          "std_fwd_iat", "min_bwd_iat",   "mean_fwd_iat",  "mean_bwd_iat",
                                          "min_fwd_iat"};

double seconds(std::int64_t us) { return static_cast<double>(us) / 1e6; }

double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

void add_aggregates(FeatureVector& v, const char* series, const std::vector<double>& xs) {
  const Aggregate a = aggregate_or_zero(xs);
  const std::array<double, 5> vals{a.min, a.max, a.mean, a.median, a.std};
  for (std::size_t i = 0; i < kAggregates.size(); ++i) {
    v.append(std::string(kAggregates[i]) + "_" + series, vals[i]);
  }
}

}  // namespace

FeatureCatalog::FeatureCatalog() : version_("etd-stat-1") {
  for (const auto& s : kScalars) entries_.push_back({s.name, Granularity::session, s.description});
  for (const auto& s : kSeries) {
    for (const char* agg : kAggregates) {
      entries_.push_back({std::string(agg) + "_" + s.name, Granularity::session,
                          std::string(agg) + " of " + s.description + " (0 when empty)"});
    }
  }
  for (const auto& p : kPacketEntries) entries_.push_back({p.name, Granularity::packet, p.description});
}

const FeatureCatalog& FeatureCatalog::full() {
  static const FeatureCatalog catalog;
  return catalog;
}

const CatalogEntry* FeatureCatalog::find(std::string_view name) const {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const CatalogEntry& e) { return e.name == name; });
  return it == entries_.end() ? nullptr : &*it;
}

std::string FeatureCatalog::version_for_window(std::size_t window_size) const {
  return version_ + "/w" + std::to_string(window_size);
}

std::vector<std::string> FeatureCatalog::columns(std::size_t window_size) const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (e.granularity == Granularity::session) {
      out.push_back(e.name);
    } else {
      for (std::size_t k = 0; k < window_size; ++k) out.push_back(packet_column_name(e.name, k));
    }
  }
  return out;
}

std::vector<std::string> FeatureCatalog::session_names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (e.granularity == Granularity::session) out.push_back(e.name);
  }
  return out;
}

std::string packet_column_name(std::string_view entry, std::size_t slot) {
  char suffix[16];
  std::snprintf(suffix, sizeof suffix, "_p%02zu", slot + 1);
  return std::string(entry) + suffix;
}

bool FeatureVector::contains(std::string_view name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

double FeatureVector::at(std::string_view name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error("MissingFeature", std::string(name));
  return values[static_cast<std::size_t>(it - names.begin())];
}

void FeatureVector::append(std::string name, double value) {
  names.push_back(std::move(name));
  values.push_back(std::isfinite(value) ? value : 0.0);
}

const char* to_string(FeatureSetName s) {
  switch (s) {
    case FeatureSetName::FOS:
      return "FOS";
    case FeatureSetName::TOP10:
      return "TOP10";
    case FeatureSetName::SIDE_CHANNEL:
      return "SIDE_CHANNEL";
    case FeatureSetName::TAMPER_RESISTANT:
      return "TAMPER_RESISTANT";
    case FeatureSetName::TIME_BASED:
      return "TIME_BASED";
    case FeatureSetName::FOTS:
      return "FOTS";
    case FeatureSetName::FULL:
      return "FULL";
  }
  return "?";
}

std::optional<FeatureSetName> parse_feature_set(std::string_view text) {
  for (auto s : {FeatureSetName::FOS, FeatureSetName::TOP10, FeatureSetName::SIDE_CHANNEL,
                 FeatureSetName::TAMPER_RESISTANT, FeatureSetName::TIME_BASED, FeatureSetName::FOTS,
                 FeatureSetName::FULL}) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

std::span<const FeatureSetName> numeric_feature_sets() {
  static constexpr std::array<FeatureSetName, 5> kSets{FeatureSetName::FOS, FeatureSetName::TOP10,
                                                       FeatureSetName::SIDE_CHANNEL, FeatureSetName::TAMPER_RESISTANT,
                                                       FeatureSetName::TIME_BASED};
  return kSets;
}

std::vector<std::string> feature_set_members(FeatureSetName s) {
  switch (s) {
    case FeatureSetName::FOS:
      return kFos;
    case FeatureSetName::TOP10:
      return kTop10;
    case FeatureSetName::SIDE_CHANNEL:
      return kSideChannel;
    case FeatureSetName::TAMPER_RESISTANT:
      return kTamperResistant;
    case FeatureSetName::TIME_BASED:
      return kTimeBased;
    case FeatureSetName::FOTS: {
      auto names = fots_feature_names();
      return {names.begin(), names.end()};
    }
    case FeatureSetName::FULL: {
      std::vector<std::string> out;
      for (const auto& e : FeatureCatalog::full().entries()) out.push_back(e.name);
      return out;
    }
  }
  throw Error("UnknownSet", "feature set");
}

std::vector<std::string> feature_set_columns(FeatureSetName s, std::size_t window_size) {
  if (s == FeatureSetName::FULL) return FeatureCatalog::full().columns(window_size);
  std::vector<std::string> out;
  const auto& catalog = FeatureCatalog::full();
  for (const auto& name : feature_set_members(s)) {
    const CatalogEntry* e = catalog.find(name);
    if (e != nullptr && e->granularity == Granularity::packet) {
      for (std::size_t k = 0; k < window_size; ++k) out.push_back(packet_column_name(name, k));
    } else {
      out.push_back(name);
    }
  }
  return out;
}

FeatureVector select_set(const FeatureVector& v, FeatureSetName s) {
  if (s == FeatureSetName::FULL) return v;
  const auto& catalog = FeatureCatalog::full();
  FeatureVector out;
  out.catalog_version = v.catalog_version;
  for (const auto& name : feature_set_members(s)) {
    const CatalogEntry* e = catalog.find(name);
    if (e != nullptr && e->granularity == Granularity::packet) {
      const std::string prefix = name + "_p";
      std::size_t found = 0;
      for (std::size_t i = 0; i < v.names.size(); ++i) {
        if (v.names[i].starts_with(prefix)) {
          out.names.push_back(v.names[i]);
          out.values.push_back(v.values[i]);
          ++found;
        }
      }
      if (found == 0) throw Error("MissingFeature", name);
    } else {
      out.names.push_back(name);
      out.values.push_back(v.at(name));
    }
  }
  return out;
}

std::vector<PacketFeatureRow> compute_packet_features(const FixedSession& fs) {
  std::vector<PacketFeatureRow> rows(fs.rows.size());
  const PacketRow* prev = nullptr;
  for (std::size_t i = 0; i < fs.rows.size(); ++i) {
    const PacketRow& r = fs.rows[i];
    if (r.padding) continue;
    auto& out = rows[i];
    out.ip_length = r.ip_length;
    out.tcp_payload_length = r.payload_length;
    out.payload_ratio = safe_ratio(r.payload_length, r.ip_length);
    out.ratio_to_previous = prev == nullptr ? 1.0 : safe_ratio(r.ip_length, prev->ip_length);
    out.time_delta = prev == nullptr ? 0.0 : seconds(r.timestamp_us - prev->timestamp_us);
    prev = &r;
  }
  return rows;
}

FeatureVector compute_session_features(const Session& s) {
  if (s.packets.empty()) throw Error("EmptyInput", "session without packets");

  // Series indexed like kSeries.
  std::array<std::vector<double>, kSeries.size()> series;
  auto push3 = [&](std::size_t base, Direction d, double x) {
    series[base].push_back(x);
    series[base + (d == Direction::forward ? 1 : 2)].push_back(x);
  };

  double total_payload = 0, fwd_payload = 0, bwd_payload = 0;
  double ip_bytes = 0, fwd_ip_bytes = 0, bwd_ip_bytes = 0;
  double fwd_count = 0, bwd_count = 0;
  std::array<double, 6> flag_counts{};
  double window_changes = 0;
  std::optional<std::int64_t> prev_ts, prev_fwd_ts, prev_bwd_ts, first_fwd_ts, first_bwd_ts, last_fwd_ts, last_bwd_ts;
  std::optional<std::uint16_t> prev_fwd_window, prev_bwd_window;

  for (const auto& sp : s.packets) {
    const auto& p = sp.packet;
    const Direction d = sp.direction;
    const bool fwd = d == Direction::forward;
    const double len = p.ip.total_length;
    const double payload = p.payload_length();

    push3(0, d, len);
    push3(3, d, payload);
    push3(6, d, p.ip.header_length);
    push3(12, d, p.ip.ttl);
    if (p.tcp) {
      push3(9, d, p.tcp->window);
      series[15].push_back(p.tcp->header_length);
      static constexpr std::array<std::uint8_t, 6> kFlags{tcp_flag::syn, tcp_flag::ack, tcp_flag::fin,
                                                          tcp_flag::rst, tcp_flag::psh, tcp_flag::urg};
      for (std::size_t f = 0; f < kFlags.size(); ++f) flag_counts[f] += p.tcp->has(kFlags[f]) ? 1 : 0;
      auto& prev_window = fwd ? prev_fwd_window : prev_bwd_window;
      if (prev_window && *prev_window != p.tcp->window) window_changes += 1;
      prev_window = p.tcp->window;
    }

    if (prev_ts) series[16].push_back(seconds(p.timestamp_us - *prev_ts));
    prev_ts = p.timestamp_us;
    auto& prev_dir = fwd ? prev_fwd_ts : prev_bwd_ts;
    if (prev_dir) series[fwd ? 17 : 18].push_back(seconds(p.timestamp_us - *prev_dir));
    prev_dir = p.timestamp_us;
    auto& first_dir = fwd ? first_fwd_ts : first_bwd_ts;
    if (!first_dir) first_dir = p.timestamp_us;
    (fwd ? last_fwd_ts : last_bwd_ts) = p.timestamp_us;

    total_payload += payload;
    ip_bytes += len;
    if (fwd) {
      fwd_payload += payload;
      fwd_ip_bytes += len;
      fwd_count += 1;
    } else {
      bwd_payload += payload;
      bwd_ip_bytes += len;
      bwd_count += 1;
    }
  }

  const double duration = seconds(s.end_time_us - s.start_time_us);
  auto span_of = [](const std::optional<std::int64_t>& a, const std::optional<std::int64_t>& b) {
    return a && b ? seconds(*b - *a) : 0.0;
  };
  const auto& lengths = series[0];
  const double max_len = *std::max_element(lengths.begin(), lengths.end());
  const double min_len = *std::min_element(lengths.begin(), lengths.end());

  FeatureVector v;
  v.catalog_version = FeatureCatalog::full().version();
  v.append("flow_duration", duration);
  v.append("fwd_duration", span_of(first_fwd_ts, last_fwd_ts));
  v.append("bwd_duration", span_of(first_bwd_ts, last_bwd_ts));
  v.append("total_payload", total_payload);
  v.append("total_fwd_payload", fwd_payload);
  v.append("total_bwd_payload", bwd_payload);
  v.append("total_ip_bytes", ip_bytes);
  v.append("total_fwd_ip_bytes", fwd_ip_bytes);
  v.append("total_bwd_ip_bytes", bwd_ip_bytes);
  v.append("packet_count", static_cast<double>(s.packets.size()));
  v.append("fwd_packet_count", fwd_count);
  v.append("bwd_packet_count", bwd_count);
  v.append("ipratio", min_len > 0 ? max_len / min_len : 1.0);
  v.append("goodput", duration > 0 ? ip_bytes / duration : 0.0);
  v.append("source_port", s.initiator.port);
  v.append("destination_port", s.responder.port);
  v.append("syn_count", flag_counts[0]);
  v.append("ack_count", flag_counts[1]);
  v.append("fin_count", flag_counts[2]);
  v.append("rst_count", flag_counts[3]);
  v.append("psh_count", flag_counts[4]);
  v.append("urg_count", flag_counts[5]);
  v.append("bwd_fwd_packet_ratio", safe_ratio(bwd_count, fwd_count));
  v.append("bwd_fwd_byte_ratio", safe_ratio(bwd_ip_bytes, fwd_ip_bytes));
  v.append("window_change_count", window_changes);
  for (std::size_t i = 0; i < kSeries.size(); ++i) add_aggregates(v, kSeries[i].name, series[i]);
  return v;
}

FeatureVector compute_full_features(const Session& s, std::size_t window_size) {
  FeatureVector v = compute_session_features(s);
  v.catalog_version = FeatureCatalog::full().version_for_window(window_size);
  const auto rows = compute_packet_features(truncate_pad(s, window_size));
  using Field = double PacketFeatureRow::*;
  static constexpr std::array<Field, 5> kFields{&PacketFeatureRow::ip_length, &PacketFeatureRow::tcp_payload_length,
                                                &PacketFeatureRow::payload_ratio, &PacketFeatureRow::ratio_to_previous,
                                                &PacketFeatureRow::time_delta};
  for (std::size_t e = 0; e < kPacketEntries.size(); ++e) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      v.append(packet_column_name(kPacketEntries[e].name, k), rows[k].*kFields[e]);
    }
  }
  return v;
}

}  // namespace etd
