#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "etd/dataset.hpp"
#include "etd/features.hpp"
#include "etd/records.hpp"

namespace etd {

inline constexpr std::size_t kFotsSize = 22;

// Frozen FOTS-compatible column order.
std::span<const std::string> fots_feature_names();

struct FotsVector {
  std::string bundle_id;
  std::array<double, kFotsSize> values{};

  double at(std::string_view name) const;
  FeatureVector to_feature_vector() const;
};

FotsVector compute_fots(const ConnectionBundle& b);

struct FotsDataset {
  Dataset dataset;
  std::size_t excluded_count = 0;  // bundles without a TLS service
};

// One row per TLS bundle (session_id = conn uid). Throws Error{"UnlabeledBundle"}
// when a TLS bundle has no entry in `labels`.
FotsDataset fots_dataset(const std::vector<ConnectionBundle>& bundles, const std::map<std::string, int>& labels,
                         const std::string& source_dataset);

}  // namespace etd
