#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "etd/matrix.hpp"

namespace etd {

enum class Algorithm { RF, XGB, C45, ADABOOST, CART, KNN, MLP, GAUSSIAN_NB, LOGISTIC, LINEAR };

const char* to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view text);
// Comparison-grid order.
std::span<const Algorithm> all_algorithms();

// Frozen defaults per algorithm:
//   RF          n_estimators=200, max_features="sqrt", max_depth=-1 (unlimited), min_samples_split=2, bootstrap=true
//   XGB         n_estimators=100, max_depth=6, learning_rate=0.3, reg_lambda=1, gamma=0, min_child_weight=1
//   C45         criterion="gain_ratio" ("entropy" for an entropy-criterion CART), max_depth=-1, min_samples_split=2
//   ADABOOST    n_estimators=50 (depth-1 stumps, SAMME)
//   CART        criterion="gini", max_depth=-1, min_samples_split=2
//   KNN         n_neighbors=6 (Euclidean)
//   MLP         hidden_units=100, learning_rate=0.001, batch_size=200, max_epochs=200, alpha=1e-4,
//               tol=1e-4, n_iter_no_change=10
//   GAUSSIAN_NB var_smoothing=1e-9
//   LOGISTIC    C=1.0, tol=1e-6, max_iter=1000
//   LINEAR      ridge_jitter=1e-8
nlohmann::json default_hyperparameters(Algorithm a);

struct ModelSpec {
  Algorithm algorithm = Algorithm::RF;
  nlohmann::json hyperparameters = nlohmann::json::object();  // fully resolved
  std::uint64_t seed = 0;

  // Overlays `overrides` on the defaults. Throws Error{"UnknownHyperparameter"}.
  static ModelSpec make(Algorithm a, std::uint64_t seed = 0, const nlohmann::json& overrides = nlohmann::json::object());

  double number(const char* key) const;
  std::string text(const char* key) const;

  nlohmann::ordered_json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

// Fitted parameters of one algorithm.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const Matrix& x, std::span<const int> y, const ModelSpec& spec) = 0;
  // Class-1 score in [0, 1] per row.
  virtual std::vector<double> score(const Matrix& x) const = 0;
  virtual nlohmann::json parameters() const = 0;
  virtual void load(const nlohmann::json& params) = 0;
};

std::unique_ptr<Classifier> make_classifier(Algorithm a);

class TrainedModel {
 public:
  TrainedModel(ModelSpec spec, std::vector<std::string> feature_names, std::shared_ptr<const Classifier> impl);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  // Throws Error{"ColumnMismatch"} when x has a different column count.
  std::vector<double> score(const Matrix& x) const;
  // Throws Error{"ColumnMismatch"} when `columns` differs from feature_names().
  std::vector<double> score(const Matrix& x, const std::vector<std::string>& columns) const;
  std::vector<int> predict(const Matrix& x, double threshold = 0.5) const;

  nlohmann::ordered_json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static TrainedModel load(const std::filesystem::path& path);

 private:
  ModelSpec spec_;
  std::vector<std::string> feature_names_;
  std::shared_ptr<const Classifier> impl_;
};

inline constexpr int kModelFormatVersion = 1;

// Throws Error{"NonFiniteInput"}, Error{"ShapeMismatch"}, Error{"SingleClass"}
// (every algorithm except LINEAR needs both classes).
// Empty `feature_names` are replaced by f0, f1, ...
TrainedModel train(const ModelSpec& spec, const Matrix& x, std::span<const int> y,
                   std::vector<std::string> feature_names = {});

// score >= threshold -> 1.
std::vector<int> predict_from_scores(std::span<const double> scores, double threshold = 0.5);

}  // namespace etd
