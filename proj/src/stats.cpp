#include "etd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "etd/error.hpp"

namespace etd {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

Aggregate aggregate(std::span<const double> xs) {
  if (xs.empty()) throw Error("EmptyInput", "aggregate of an empty list");
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  Aggregate a;
  a.min = sorted.front();
  a.max = sorted.back();
  a.mean = mean(xs);
  const std::size_t n = sorted.size();
  a.median = n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
  a.std = population_std(xs);
  return a;
}

Aggregate aggregate_or_zero(std::span<const double> xs) { return xs.empty() ? Aggregate{} : aggregate(xs); }

}  // namespace etd
