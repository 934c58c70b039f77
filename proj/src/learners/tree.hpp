#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "etd/matrix.hpp"
#include "etd/random.hpp"

namespace etd::detail {

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);
};

enum class SplitCriterion { gini, entropy, gain_ratio };

struct ClassificationTreeParams {
  SplitCriterion criterion = SplitCriterion::gini;
  int max_depth = -1;  // unlimited
  std::size_t min_samples_split = 2;
  std::size_t max_features = 0;  // 0: every feature at every split
};

// Grows a binary classification tree on the rows with positive weight.
// Leaves hold the weighted class-1 fraction. `rng` is required when
// max_features is set.
DecisionTree grow_classification_tree(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                                      const ClassificationTreeParams& params, Rng* rng = nullptr);

struct GradientTreeParams {
  int max_depth = 6;
  double reg_lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  double learning_rate = 0.3;
};

// Second-order boosting tree; leaves hold learning_rate * -G / (H + lambda).
DecisionTree grow_gradient_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                                const GradientTreeParams& params);

}  // namespace etd::detail
