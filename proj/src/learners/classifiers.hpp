#pragma once

#include <cmath>
#include <memory>

#include "etd/learners.hpp"

namespace etd::detail {

std::unique_ptr<Classifier> make_random_forest();
std::unique_ptr<Classifier> make_single_tree(Algorithm a);  // CART or C45
std::unique_ptr<Classifier> make_gradient_boosting();
std::unique_ptr<Classifier> make_adaboost();
std::unique_ptr<Classifier> make_knn();
std::unique_ptr<Classifier> make_gaussian_nb();
std::unique_ptr<Classifier> make_logistic();
std::unique_ptr<Classifier> make_linear();
std::unique_ptr<Classifier> make_mlp();

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace etd::detail
