#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "etd/flow.hpp"

namespace etd {

enum class Granularity { packet, session };

struct CatalogEntry {
  std::string name;
  Granularity granularity = Granularity::session;
  std::string definition;
};

// Ordered catalog of protocol-agnostic numeric features. Session entries map
// to one column each; packet entries expand to one column per window slot
// (`<name>_p01` ... `<name>_pNN`).
class FeatureCatalog {
 public:
  static const FeatureCatalog& full();

  const std::string& version() const { return version_; }
  std::span<const CatalogEntry> entries() const { return entries_; }
  const CatalogEntry* find(std::string_view name) const;

  // Versioned identifier that also pins the packet window.
  std::string version_for_window(std::size_t window_size) const;
  std::vector<std::string> columns(std::size_t window_size) const;
  std::vector<std::string> session_names() const;

 private:
  FeatureCatalog();

  std::string version_;
  std::vector<CatalogEntry> entries_;
};

std::string packet_column_name(std::string_view entry, std::size_t slot);

// Named numeric values in catalog order. Values are always finite.
struct FeatureVector {
  std::string catalog_version;
  std::vector<std::string> names;
  std::vector<double> values;

  std::size_t size() const { return names.size(); }
  bool contains(std::string_view name) const;
  // Throws Error{"MissingFeature"}.
  double at(std::string_view name) const;
  void append(std::string name, double value);
};

enum class FeatureSetName { FOS, TOP10, SIDE_CHANNEL, TAMPER_RESISTANT, TIME_BASED, FOTS, FULL };

const char* to_string(FeatureSetName s);
std::optional<FeatureSetName> parse_feature_set(std::string_view text);
// The five protocol-agnostic sets evaluated in the comparison grid.
std::span<const FeatureSetName> numeric_feature_sets();

// Catalog entry names belonging to a set (FULL: every catalog entry).
std::vector<std::string> feature_set_members(FeatureSetName s);
// Member names expanded to CSV columns for a packet window.
std::vector<std::string> feature_set_columns(FeatureSetName s, std::size_t window_size = kDefaultWindowSize);

// Projects a vector onto a named set; values are copied unchanged.
// Throws Error{"MissingFeature"} when a member column is absent.
FeatureVector select_set(const FeatureVector& v, FeatureSetName s);

struct PacketFeatureRow {
  double ip_length = 0.0;
  double tcp_payload_length = 0.0;
  double payload_ratio = 0.0;
  double ratio_to_previous = 0.0;
  double time_delta = 0.0;  // seconds
};

std::vector<PacketFeatureRow> compute_packet_features(const FixedSession& fs);

// Session-granularity entries, computed over every packet of the session.
FeatureVector compute_session_features(const Session& s);

// Session features followed by the expanded packet window: one row of the
// FULL profile.
FeatureVector compute_full_features(const Session& s, std::size_t window_size = kDefaultWindowSize);

}  // namespace etd
