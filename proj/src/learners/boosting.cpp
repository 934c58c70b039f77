#include <algorithm>
#include <cmath>

#include "classifiers.hpp"
#include "etd/error.hpp"
#include "tree.hpp"

namespace etd::detail {
namespace {

class GradientBoosting final : public Classifier {
 public:
  void fit(const Matrix& x, std::span<const int> y, const ModelSpec& spec) override {
    GradientTreeParams params;
    params.max_depth = static_cast<int>(spec.number("max_depth"));
    params.learning_rate = spec.number("learning_rate");
    params.reg_lambda = spec.number("reg_lambda");
    params.gamma = spec.number("gamma");
    params.min_child_weight = spec.number("min_child_weight");
    const auto rounds = static_cast<std::size_t>(spec.number("n_estimators"));

    trees_.clear();
    std::vector<double> margin(x.rows, 0.0), grad(x.rows), hess(x.rows);
    for (std::size_t r = 0; r < rounds; ++r) {
      for (std::size_t i = 0; i < x.rows; ++i) {
        const double p = sigmoid(margin[i]);
        grad[i] = p - y[i];
        hess[i] = std::max(p * (1.0 - p), 1e-16);
      }
      auto tree = grow_gradient_tree(x, grad, hess, params);
      for (std::size_t i = 0; i < x.rows; ++i) margin[i] += tree.predict(x.row(i));
      trees_.push_back(std::move(tree));
    }
  }

  std::vector<double> score(const Matrix& x) const override {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
      double m = 0.0;
      for (const auto& t : trees_) m += t.predict(x.row(i));
      out[i] = sigmoid(m);
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

// SAMME with depth-1 stumps; score = sigmoid(2 * normalized margin).
class AdaBoost final : public Classifier {
 public:
  void fit(const Matrix& x, std::span<const int> y, const ModelSpec& spec) override {
    const auto rounds = static_cast<std::size_t>(spec.number("n_estimators"));
    ClassificationTreeParams params;
    params.criterion = SplitCriterion::gini;
    params.max_depth = 1;
    stumps_.clear();
    alphas_.clear();

    std::vector<double> w(x.rows, 1.0 / static_cast<double>(x.rows));
    std::vector<char> miss(x.rows);
    for (std::size_t r = 0; r < rounds; ++r) {
      auto stump = grow_classification_tree(x, y, w, params);
      double err = 0.0, total = 0.0;
      for (std::size_t i = 0; i < x.rows; ++i) {
        const int pred = stump.predict(x.row(i)) >= 0.5 ? 1 : 0;
        miss[i] = pred != y[i];
        total += w[i];
        if (miss[i]) err += w[i];
      }
      err /= total;
      if (err <= 0.0) {
        stumps_.push_back(std::move(stump));
        alphas_.push_back(1.0);
        break;
      }
      if (err >= 0.5) {
        if (stumps_.empty()) {
          stumps_.push_back(std::move(stump));
          alphas_.push_back(1.0);
        }
        break;
      }
      const double alpha = std::log((1.0 - err) / err);
      double sum = 0.0;
      for (std::size_t i = 0; i < x.rows; ++i) {
        if (miss[i]) w[i] *= std::exp(alpha);
        sum += w[i];
      }
      for (auto& v : w) v /= sum;
      stumps_.push_back(std::move(stump));
      alphas_.push_back(alpha);
    }
  }

  std::vector<double> score(const Matrix& x) const override {
    double total = 0.0;
    for (double a : alphas_) total += a;
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
      double m = 0.0;
      for (std::size_t k = 0; k < stumps_.size(); ++k)
        m += alphas_[k] * (stumps_[k].predict(x.row(i)) >= 0.5 ? 1.0 : -1.0);
      out[i] = sigmoid(2.0 * m / total);
    }
    return out;
  }

  nlohmann::json parameters() const override {
    nlohmann::json stumps = nlohmann::json::array();
    for (const auto& t : stumps_) stumps.push_back(t.to_json());
    return {{"stumps", stumps}, {"alphas", alphas_}};
  }

  void load(const nlohmann::json& params) override {
    stumps_.clear();
    for (const auto& t : params.at("stumps")) stumps_.push_back(DecisionTree::from_json(t));
    alphas_ = params.at("alphas").get<std::vector<double>>();
  }

 private:
  std::vector<DecisionTree> stumps_;
  std::vector<double> alphas_;
};

}  // namespace

std::unique_ptr<Classifier> make_gradient_boosting() { return std::make_unique<GradientBoosting>(); }
std::unique_ptr<Classifier> make_adaboost() { return std::make_unique<AdaBoost>(); }

}  // namespace etd::detail
