#pragma once

#include <span>

namespace etd {

struct Aggregate {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  // population (divisor N)
};

// Throws Error{"EmptyInput"} on an empty list.
Aggregate aggregate(std::span<const double> xs);

// All-zero aggregate for an empty list.
Aggregate aggregate_or_zero(std::span<const double> xs);

double mean(std::span<const double> xs);
double population_std(std::span<const double> xs);

}  // namespace etd
