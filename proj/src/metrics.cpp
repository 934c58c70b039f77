#include "etd/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>

#include "etd/error.hpp"

namespace etd {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw Error("LengthMismatch", std::to_string(a) + " vs " + std::to_string(b));
}

void check_label(int v) {
  if (v != 0 && v != 1) throw Error("BadLabel", "label " + std::to_string(v));
}

}  // namespace

ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  check_lengths(y_true.size(), y_pred.size());
  ConfusionCounts c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    check_label(y_true[i]);
    check_label(y_pred[i]);
    if (y_true[i] == 1) {
      (y_pred[i] == 1 ? c.tp : c.fn) += 1;
    } else {
      (y_pred[i] == 1 ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

Rates metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error("EmptyEval", "no evaluated rows");
  Rates r;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  r.tpr = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  r.fpr = c.fp + c.tn == 0 ? 0.0 : static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
  return r;
}

double roc_auc(std::span<const double> scores, std::span<const int> y_true) {
  check_lengths(scores.size(), y_true.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of positive ranks (1-based, averaged over tie groups), kept doubled to stay integral.
  std::size_t pos = 0;
  std::uint64_t rank_sum2 = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t doubled_avg = static_cast<std::uint64_t>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      check_label(y_true[order[t]]);
      if (y_true[order[t]] == 1) {
        ++pos;
        rank_sum2 += doubled_avg;
      }
    }
    i = j;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw Error("SingleClass", "roc_auc needs both classes");
  const auto p = static_cast<std::uint64_t>(pos);
  const std::uint64_t u2 = rank_sum2 - p * (p + 1);  // 2 * Mann-Whitney U
  return static_cast<double>(u2) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> y_true) {
  check_lengths(scores.size(), y_true.size());
  std::size_t pos = 0;
  for (int v : y_true) {
    check_label(v);
    pos += static_cast<std::size_t>(v);
  }
  const std::size_t neg = y_true.size() - pos;
  if (pos == 0 || neg == 0) throw Error("SingleClass", "roc_curve needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> out{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      (y_true[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    out.push_back({t, static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return out;
}

}  // namespace etd
