#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "etd/dataset.hpp"
#include "etd/features.hpp"
#include "etd/learners.hpp"
#include "etd/metrics.hpp"

namespace etd {

struct FoldMetrics {
  double accuracy = 0.0;
  double roc_auc = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population
};

struct EvalReport {
  ModelSpec spec;
  FeatureSetName feature_set = FeatureSetName::FULL;
  std::size_t k = 0;
  std::uint64_t fold_seed = 0;
  std::string dataset_ref;  // e.g. sha256 of the input CSV
  std::vector<FoldMetrics> folds;
  MetricSummary accuracy, roc_auc, fpr, tpr;

  nlohmann::ordered_json to_json() const;
};

// Dataset columns a feature set selects. FULL keeps every column of `d`.
// Throws Error{"MissingFeature"}.
std::vector<std::string> resolve_set_columns(const Dataset& d, FeatureSetName set);

// Per fold: normalizer fitted on the training split, model seed derived from
// spec.seed and the fold index.
EvalReport run_cv(const ModelSpec& spec, const Dataset& rows, FeatureSetName set, const FoldPlan& plan);

enum class CrossDirection { train_others_test_A, train_A_test_others };
const char* to_string(CrossDirection d);

struct CrossDatasetCell {
  std::string source;  // A
  FoldMetrics metrics;
};

struct CrossDatasetReport {
  CrossDirection direction = CrossDirection::train_others_test_A;
  ModelSpec spec;
  FeatureSetName feature_set = FeatureSetName::FOS;
  std::vector<CrossDatasetCell> cells;  // sorted by source

  nlohmann::ordered_json to_json() const;
};

// Sources come from LabeledRow::source_dataset. Throws Error{"SingleSource"},
// Error{"SingleClass"} when a source lacks a class.
std::vector<CrossDatasetReport> run_cross_dataset(const ModelSpec& spec, const Dataset& rows, FeatureSetName set,
                                                  std::uint64_t seed);

std::string render_cross_markdown(const std::vector<CrossDatasetReport>& reports);

struct GridOptions {
  std::vector<Algorithm> algorithms;      // empty: all ten
  std::vector<FeatureSetName> sets;       // empty: the five numeric sets
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::map<Algorithm, nlohmann::json> overrides;  // hyperparameter overrides
  std::string dataset_ref;
};

struct GridResult {
  std::vector<EvalReport> reports;  // set-major, algorithm order within a set

  nlohmann::ordered_json to_json() const;
  std::string to_markdown() const;
  std::string to_csv() const;
};

// One fold plan (seeded from options.seed) shared by every cell. The result
// does not depend on options.threads.
GridResult experiment_grid(const Dataset& rows, const GridOptions& options);

MetricSummary summarize(std::span<const double> values);

}  // namespace etd
