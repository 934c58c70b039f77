#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace etd {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

// Positive class is 1 (malicious). Throws Error{"LengthMismatch"}, Error{"BadLabel"}.
ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred);

struct Rates {
  double accuracy = 0.0;
  double tpr = 0.0;  // 0 without positives
  double fpr = 0.0;  // 0 without negatives
};

// Throws Error{"EmptyEval"}.
Rates metrics(const ConfusionCounts& c);

// Rank-statistic AUC with ties credited one half. Throws Error{"SingleClass"},
// Error{"LengthMismatch"}.
double roc_auc(std::span<const double> scores, std::span<const int> y_true);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

// Full-threshold curve from (0,0) to (1,1), thresholds in decreasing order.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> y_true);

}  // namespace etd
