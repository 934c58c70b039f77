#include "tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace etd::detail {
namespace {

double gini(double a, double b) {
  const double n = a + b;
  if (n <= 0) return 0.0;
  const double pa = a / n;
  const double pb = b / n;
  return 1.0 - pa * pa - pb * pb;
}

double entropy(double a, double b) {
  const double n = a + b;
  if (n <= 0) return 0.0;
  double h = 0.0;
  for (double c : {a, b}) {
    if (c > 0) {
      const double p = c / n;
      h -= p * std::log2(p);
    }
  }
  return h;
}

// Threshold strictly between two distinct consecutive values.
double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

class ClassificationBuilder {
 public:
  ClassificationBuilder(const Matrix& x, std::span<const int> y, std::span<const double> w,
                        const ClassificationTreeParams& p, Rng* rng)
      : x_(x), y_(y), w_(w), params_(p), rng_(rng), features_(x.cols) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  DecisionTree run() {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < x_.rows; ++i) {
      if (w_[i] > 0) idx.push_back(i);
    }
    build(idx, 0);
    return std::move(tree_);
  }

 private:
  struct Candidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
    double ratio = 0.0;
  };

  int build(std::vector<std::size_t>& idx, int depth) {
    double w0 = 0, w1 = 0;
    for (auto i : idx) (y_[i] == 1 ? w1 : w0) += w_[i];
    const int node = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, w1 / (w0 + w1)});

    const bool pure = w0 == 0 || w1 == 0;
    const bool depth_limited = params_.max_depth >= 0 && depth >= params_.max_depth;
    if (pure || depth_limited || idx.size() < params_.min_samples_split) return node;

    auto best = find_split(idx, w0, w1);
    if (!best) return node;

    std::vector<std::size_t> left, right;
    for (auto i : idx) (x_(i, best->feature) <= best->threshold ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    tree_.nodes[node].feature = static_cast<int>(best->feature);
    tree_.nodes[node].threshold = best->threshold;
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    tree_.nodes[node].left = l;
    tree_.nodes[node].right = r;
    return node;
  }

  std::optional<Candidate> find_split(const std::vector<std::size_t>& idx, double w0, double w1) {
    const double total = w0 + w1;
    const bool gain_ratio = params_.criterion == SplitCriterion::gain_ratio;
    const double parent = params_.criterion == SplitCriterion::gini ? gini(w0, w1) : entropy(w0, w1);

    std::size_t budget = x_.cols;
    if (params_.max_features > 0 && params_.max_features < x_.cols) {
      rng_->shuffle(features_);
      budget = params_.max_features;
    }

    std::optional<Candidate> best;
    std::vector<Candidate> all;  // gain-ratio mode
    std::size_t evaluated = 0;
    for (std::size_t fi = 0; fi < features_.size(); ++fi) {
      // Keep drawing features past the budget only while no split was found.
      if (evaluated >= budget && (best || !all.empty())) break;
      const std::size_t f = params_.max_features > 0 ? features_[fi] : fi;
      ++evaluated;

      sorted_.clear();
      for (auto i : idx) sorted_.emplace_back(x_(i, f), i);
      std::sort(sorted_.begin(), sorted_.end());
      if (sorted_.front().first == sorted_.back().first) continue;

      double l0 = 0, l1 = 0;
      for (std::size_t k = 0; k + 1 < sorted_.size(); ++k) {
        const auto i = sorted_[k].second;
        (y_[i] == 1 ? l1 : l0) += w_[i];
        if (sorted_[k].first == sorted_[k + 1].first) continue;
        const double r0 = w0 - l0;
        const double r1 = w1 - l1;
        const double wl = l0 + l1;
        const double wr = r0 + r1;
        Candidate c;
        c.feature = f;
        c.threshold = midpoint(sorted_[k].first, sorted_[k + 1].first);
        if (params_.criterion == SplitCriterion::gini) {
          c.gain = parent - (wl * gini(l0, l1) + wr * gini(r0, r1)) / total;
        } else {
          c.gain = parent - (wl * entropy(l0, l1) + wr * entropy(r0, r1)) / total;
        }
        if (gain_ratio) {
          const double split_info = entropy(wl, wr);
          c.ratio = split_info > 0 ? c.gain / split_info : 0.0;
          all.push_back(c);
        } else if (!best || c.gain > best->gain) {
          best = c;
        }
      }
    }
    if (!gain_ratio || all.empty()) return best;

    double mean_gain = 0.0;
    for (const auto& c : all) mean_gain += c.gain;
    mean_gain /= static_cast<double>(all.size());
    for (const auto& c : all) {
      if (c.gain + 1e-12 < mean_gain) continue;
      if (!best || c.ratio > best->ratio) best = c;
    }
    return best;
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::span<const double> w_;
  ClassificationTreeParams params_;
  Rng* rng_;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, std::size_t>> sorted_;
  DecisionTree tree_;
};

class GradientBuilder {
 public:
  GradientBuilder(const Matrix& x, std::span<const double> g, std::span<const double> h, const GradientTreeParams& p)
      : x_(x), g_(g), h_(h), params_(p) {}

  DecisionTree run() {
    std::vector<std::size_t> idx(x_.rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    build(idx, 0);
    return std::move(tree_);
  }

 private:
  double leaf_score(double g, double h) const { return g * g / (h + params_.reg_lambda); }

  int build(std::vector<std::size_t>& idx, int depth) {
    double gs = 0, hs = 0;
    for (auto i : idx) {
      gs += g_[i];
      hs += h_[i];
    }
    const int node = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, -params_.learning_rate * gs / (hs + params_.reg_lambda)});
    if (depth >= params_.max_depth || idx.size() < 2) return node;

    double best_gain = 0.0;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    bool found = false;
    for (std::size_t f = 0; f < x_.cols; ++f) {
      sorted_.clear();
      for (auto i : idx) sorted_.emplace_back(x_(i, f), i);
      std::sort(sorted_.begin(), sorted_.end());
      double gl = 0, hl = 0;
      for (std::size_t k = 0; k + 1 < sorted_.size(); ++k) {
        const auto i = sorted_[k].second;
        gl += g_[i];
        hl += h_[i];
        if (sorted_[k].first == sorted_[k + 1].first) continue;
        const double gr = gs - gl;
        const double hr = hs - hl;
        if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
        const double gain = 0.5 * (leaf_score(gl, hl) + leaf_score(gr, hr) - leaf_score(gs, hs)) - params_.gamma;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = midpoint(sorted_[k].first, sorted_[k + 1].first);
          found = true;
        }
      }
    }
    if (!found) return node;

    std::vector<std::size_t> left, right;
    for (auto i : idx) (x_(i, best_feature) <= best_threshold ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    tree_.nodes[node].feature = static_cast<int>(best_feature);
    tree_.nodes[node].threshold = best_threshold;
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    tree_.nodes[node].left = l;
    tree_.nodes[node].right = r;
    return node;
  }

  const Matrix& x_;
  std::span<const double> g_;
  std::span<const double> h_;
  GradientTreeParams params_;
  std::vector<std::pair<double, std::size_t>> sorted_;
  DecisionTree tree_;
};

}  // namespace

double DecisionTree::predict(std::span<const double> x) const {
  int n = 0;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(n)].value;
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const auto& node = nodes[static_cast<std::size_t>(n)];
    if (node.feature >= 0) {
      stack.emplace_back(node.left, d + 1);
      stack.emplace_back(node.right, d + 1);
    }
  }
  return deepest;
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                 left = nlohmann::json::array(), right = nlohmann::json::array(), value = nlohmann::json::array();
  for (const auto& n : nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  DecisionTree t;
  const auto& f = j.at("feature");
  t.nodes.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    t.nodes[i] = TreeNode{f[i].get<int>(), j.at("threshold")[i].get<double>(), j.at("left")[i].get<int>(),
                          j.at("right")[i].get<int>(), j.at("value")[i].get<double>()};
  }
  return t;
}

DecisionTree grow_classification_tree(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                                      const ClassificationTreeParams& params, Rng* rng) {
  return ClassificationBuilder(x, y, weights, params, rng).run();
}

DecisionTree grow_gradient_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                                const GradientTreeParams& params) {
  return GradientBuilder(x, grad, hess, params).run();
}

}  // namespace etd::detail
