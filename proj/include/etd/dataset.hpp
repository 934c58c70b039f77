#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "etd/matrix.hpp"

namespace etd {

struct LabeledRow {
  std::string session_id;
  std::vector<double> features;
  int label = 0;  // 0 legitimate, 1 malicious
  std::string source_dataset;
};

// Feature table with a shared column header. Row order is significant.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<LabeledRow> rows;

  std::size_t column_index(const std::string& name) const;  // throws MissingFeature
  // Keeps only `cols`, in that order. Throws Error{"MissingFeature"}.
  Dataset project(const std::vector<std::string>& cols) const;
  Dataset subset(const std::vector<std::size_t>& row_indices) const;
  Matrix matrix() const;
  std::vector<int> labels() const;
  std::size_t count_label(int label) const;
};

// CSV: session_id, <columns...>, label, source_dataset. Header row mandatory.
void write_csv(std::ostream& out, const Dataset& d);
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);
void write_csv_file(const std::string& path, const Dataset& d);

// Shortest round-trip decimal form used for every numeric cell.
std::string format_number(double x);

struct DedupResult {
  std::vector<LabeledRow> rows;
  std::size_t removed_count = 0;
  std::size_t conflict_count = 0;  // distinct feature vectors seen with both labels
};

// Collapses rows with identical (features, label), keeping the first occurrence.
DedupResult deduplicate(const std::vector<LabeledRow>& rows);

enum class NormRange { zero_one, sym_one };

struct Normalizer {
  NormRange range = NormRange::zero_one;
  std::vector<std::string> columns;  // may be empty when fitted on a bare matrix
  std::vector<double> lo;
  std::vector<double> hi;

  // (x - lo) / (hi - lo) mapped into the range and clamped; constant
  // features map to the lower bound.
  double transform(std::size_t feature, double x) const;
  Matrix apply(const Matrix& x) const;
  // Throws Error{"CatalogMismatch"} when the dataset columns differ.
  Dataset apply(const Dataset& d) const;
};

// Throws Error{"EmptyTrain"}.
Normalizer fit_normalizer(const Matrix& train, NormRange range = NormRange::zero_one);
Normalizer fit_normalizer(const Dataset& train, NormRange range = NormRange::zero_one);

// Randomly drops majority-class rows down to the minority count. Kept rows
// retain their input order. Throws Error{"SingleClass"}.
std::vector<LabeledRow> balance_undersample(const std::vector<LabeledRow>& rows, std::uint64_t seed);

struct ClassTargets {
  std::size_t malicious = 0;
  std::size_t legitimate = 0;
};

struct CompositionPlan {
  std::map<std::string, ClassTargets> targets;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
  static CompositionPlan from_json(const nlohmann::json& j);
};

// Session counts of the reference five-source composition, scaled by `factor`
// and rounded to the nearest integer.
CompositionPlan reference_composition_plan(double factor, std::uint64_t seed = 0);

// Seeded sample without replacement per (source, class). Output is grouped by
// source name; selected rows keep their source order and are tagged with the
// source name. Throws Error{"InsufficientRows"}.
std::vector<LabeledRow> compose(const std::map<std::string, std::vector<LabeledRow>>& sources,
                                const CompositionPlan& plan);

struct FoldPlan {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::vector<std::size_t> assignments;  // row -> fold

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;

  nlohmann::ordered_json to_json() const;
  static FoldPlan from_json(const nlohmann::json& j);
};

// Per class: shuffle, then deal round-robin continuing where the previous
// class stopped. Throws Error{"TooFewRows"} when k < 2 or a class has < k rows.
FoldPlan stratified_kfold(const std::vector<int>& labels, std::size_t k, std::uint64_t seed);

}  // namespace etd
