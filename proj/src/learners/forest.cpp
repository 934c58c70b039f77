#include <algorithm>
#include <cmath>

#include "classifiers.hpp"
#include "etd/error.hpp"
#include "etd/random.hpp"
#include "tree.hpp"

namespace etd::detail {
namespace {

std::size_t resolve_max_features(const ModelSpec& spec, std::size_t n_features) {
  const auto& mf = spec.hyperparameters.at("max_features");
  if (mf.is_string()) {
    const auto s = mf.get<std::string>();
    if (s == "sqrt") return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(n_features))));
    if (s == "log2") return std::max<std::size_t>(1, static_cast<std::size_t>(std::log2(double(n_features))));
    if (s == "all") return 0;
    throw Error("BadHyperparameter", "max_features=" + s);
  }
  const auto n = mf.get<double>();
  if (n < 1) throw Error("BadHyperparameter", "max_features must be >= 1");
  return std::min(n_features, static_cast<std::size_t>(n));
}

class RandomForest final : public Classifier {
 public:
  void fit(const Matrix& x, std::span<const int> y, const ModelSpec& spec) override {
    const auto n_trees = static_cast<std::size_t>(spec.number("n_estimators"));
    ClassificationTreeParams params;
    params.criterion = SplitCriterion::gini;
    params.max_depth = static_cast<int>(spec.number("max_depth"));
    params.min_samples_split = static_cast<std::size_t>(spec.number("min_samples_split"));
    params.max_features = resolve_max_features(spec, x.cols);
    const bool bootstrap = spec.hyperparameters.at("bootstrap").get<bool>();

    trees_.clear();
    trees_.reserve(n_trees);
    std::vector<double> weights(x.rows);
    for (std::size_t t = 0; t < n_trees; ++t) {
      Rng rng(derive_seed(spec.seed, "rf/tree/" + std::to_string(t)));
      if (bootstrap) {
        std::fill(weights.begin(), weights.end(), 0.0);
        for (std::size_t i = 0; i < x.rows; ++i) weights[rng.index(x.rows)] += 1.0;
      } else {
        std::fill(weights.begin(), weights.end(), 1.0);
      }
      trees_.push_back(grow_classification_tree(x, y, weights, params, &rng));
    }
  }

  // Fraction of trees voting class 1 (leaf class-1 fraction >= 0.5).
  std::vector<double> score(const Matrix& x) const override {
    std::vector<double> out(x.rows, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
      std::size_t votes = 0;
      for (const auto& t : trees_) votes += t.predict(x.row(i)) >= 0.5 ? 1 : 0;
      out[i] = static_cast<double>(votes) / static_cast<double>(trees_.size());
    }
    return out;
  }

  nlohmann::json parameters() const override {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    return {{"trees", trees}};
  }

  void load(const nlohmann::json& params) override {
    trees_.clear();
    for (const auto& t : params.at("trees")) trees_.push_back(DecisionTree::from_json(t));
  }

 private:
  std::vector<DecisionTree> trees_;
};

class SingleTree final : public Classifier {
 public:
  explicit SingleTree(Algorithm a) : algorithm_(a) {}

  void fit(const Matrix& x, std::span<const int> y, const ModelSpec& spec) override {
    ClassificationTreeParams params;
    const std::string criterion = spec.text("criterion");
    if (criterion == "gini") {
      params.criterion = SplitCriterion::gini;
    } else if (criterion == "entropy") {
      params.criterion = SplitCriterion::entropy;
    } else if (criterion == "gain_ratio") {
      params.criterion = SplitCriterion::gain_ratio;
    } else {
      throw Error("BadHyperparameter", "criterion=" + criterion);
    }
    params.max_depth = static_cast<int>(spec.number("max_depth"));
    params.min_samples_split = static_cast<std::size_t>(spec.number("min_samples_split"));
    const std::vector<double> weights(x.rows, 1.0);
    tree_ = grow_classification_tree(x, y, weights, params);
  }

  // Leaf class-1 fraction.
  std::vector<double> score(const Matrix& x) const override {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = tree_.predict(x.row(i));
    return out;
  }

  nlohmann::json parameters() const override { return {{"tree", tree_.to_json()}}; }
  void load(const nlohmann::json& params) override { tree_ = DecisionTree::from_json(params.at("tree")); }

 private:
  Algorithm algorithm_;
  DecisionTree tree_;
};

}  // namespace

std::unique_ptr<Classifier> make_random_forest() { return std::make_unique<RandomForest>(); }
std::unique_ptr<Classifier> make_single_tree(Algorithm a) { return std::make_unique<SingleTree>(a); }

}  // namespace etd::detail
