#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "classifiers.hpp"
#include "etd/error.hpp"
#include "etd/learners.hpp"

namespace etd {

namespace {

constexpr std::array<Algorithm, 10> kAlgorithms{Algorithm::RF,  Algorithm::XGB, Algorithm::C45,
                                                Algorithm::ADABOOST, Algorithm::CART, Algorithm::KNN,
                                                Algorithm::MLP, Algorithm::GAUSSIAN_NB, Algorithm::LOGISTIC,
                                                Algorithm::LINEAR};

}  // namespace

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::RF: return "RF";
    case Algorithm::XGB: return "XGB";
    case Algorithm::C45: return "C45";
    case Algorithm::ADABOOST: return "ADABOOST";
    case Algorithm::CART: return "CART";
    case Algorithm::KNN: return "KNN";
    case Algorithm::MLP: return "MLP";
    case Algorithm::GAUSSIAN_NB: return "GAUSSIAN_NB";
    case Algorithm::LOGISTIC: return "LOGISTIC";
    case Algorithm::LINEAR: return "LINEAR";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view text) {
  std::string upper(text);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto a : kAlgorithms)
    if (upper == to_string(a)) return a;
  if (upper == "C4.5") return Algorithm::C45;
  return std::nullopt;
}

std::span<const Algorithm> all_algorithms() { return kAlgorithms; }

nlohmann::json default_hyperparameters(Algorithm a) {
  switch (a) {
    case Algorithm::RF:
      return {{"n_estimators", 200}, {"max_features", "sqrt"}, {"max_depth", -1}, {"min_samples_split", 2},
              {"bootstrap", true}};
    case Algorithm::XGB:
      return {{"n_estimators", 100}, {"max_depth", 6}, {"learning_rate", 0.3}, {"reg_lambda", 1.0},
              {"gamma", 0.0}, {"min_child_weight", 1.0}};
    case Algorithm::C45:
      return {{"criterion", "gain_ratio"}, {"max_depth", -1}, {"min_samples_split", 2}};
    case Algorithm::ADABOOST:
      return {{"n_estimators", 50}};
    case Algorithm::CART:
      return {{"criterion", "gini"}, {"max_depth", -1}, {"min_samples_split", 2}};
    case Algorithm::KNN:
      return {{"n_neighbors", 6}};
    case Algorithm::MLP:
      return {{"hidden_units", 100}, {"learning_rate", 0.001}, {"batch_size", 200}, {"max_epochs", 200},
              {"alpha", 1e-4},       {"tol", 1e-4},            {"n_iter_no_change", 10}};
    case Algorithm::GAUSSIAN_NB:
      return {{"var_smoothing", 1e-9}};
    case Algorithm::LOGISTIC:
      return {{"C", 1.0}, {"tol", 1e-6}, {"max_iter", 1000}};
    case Algorithm::LINEAR:
      return {{"ridge_jitter", 1e-8}};
  }
  return nlohmann::json::object();
}

ModelSpec ModelSpec::make(Algorithm a, std::uint64_t seed, const nlohmann::json& overrides) {
  ModelSpec spec;
  spec.algorithm = a;
  spec.seed = seed;
  spec.hyperparameters = default_hyperparameters(a);
  if (!overrides.is_null() && !overrides.is_object())
    throw Error("UnknownHyperparameter", "hyperparameters must be an object");
  if (overrides.is_object()) {
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
      if (!spec.hyperparameters.contains(it.key()))
        throw Error("UnknownHyperparameter", std::string(to_string(a)) + " has no hyperparameter '" + it.key() + "'");
      const auto& def = spec.hyperparameters[it.key()];
      const bool ok = (def.is_number() && it.value().is_number()) || (def.is_boolean() && it.value().is_boolean()) ||
                      (def.is_string() && (it.value().is_string() || it.value().is_number()));
      if (!ok) throw Error("BadHyperparameter", it.key() + "=" + it.value().dump());
      spec.hyperparameters[it.key()] = it.value();
    }
  }
  return spec;
}

double ModelSpec::number(const char* key) const {
  const auto it = hyperparameters.find(key);
  if (it == hyperparameters.end() || !it->is_number()) throw Error("BadHyperparameter", key);
  return it->get<double>();
}

std::string ModelSpec::text(const char* key) const {
  const auto it = hyperparameters.find(key);
  if (it == hyperparameters.end() || !it->is_string()) throw Error("BadHyperparameter", key);
  return it->get<std::string>();
}

nlohmann::ordered_json ModelSpec::to_json() const {
  nlohmann::ordered_json j;
  j["algorithm"] = to_string(algorithm);
  j["seed"] = seed;
  j["hyperparameters"] = nlohmann::ordered_json::parse(hyperparameters.dump());
  return j;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  const auto name = j.at("algorithm").get<std::string>();
  const auto a = parse_algorithm(name);
  if (!a) throw Error("UnknownAlgorithm", name);
  return make(*a, j.value("seed", std::uint64_t{0}), j.value("hyperparameters", nlohmann::json::object()));
}

std::unique_ptr<Classifier> make_classifier(Algorithm a) {
  switch (a) {
    case Algorithm::RF: return detail::make_random_forest();
    case Algorithm::XGB: return detail::make_gradient_boosting();
    case Algorithm::C45:
    case Algorithm::CART: return detail::make_single_tree(a);
    case Algorithm::ADABOOST: return detail::make_adaboost();
    case Algorithm::KNN: return detail::make_knn();
    case Algorithm::MLP: return detail::make_mlp();
    case Algorithm::GAUSSIAN_NB: return detail::make_gaussian_nb();
    case Algorithm::LOGISTIC: return detail::make_logistic();
    case Algorithm::LINEAR: return detail::make_linear();
  }
  throw Error("UnknownAlgorithm", "?");
}

TrainedModel::TrainedModel(ModelSpec spec, std::vector<std::string> feature_names,
                           std::shared_ptr<const Classifier> impl)
    : spec_(std::move(spec)), feature_names_(std::move(feature_names)), impl_(std::move(impl)) {}

std::vector<double> TrainedModel::score(const Matrix& x) const {
  if (x.cols != feature_names_.size())
    throw Error("ColumnMismatch", "expected " + std::to_string(feature_names_.size()) + " columns, got " +
                                      std::to_string(x.cols));
  return impl_->score(x);
}

std::vector<double> TrainedModel::score(const Matrix& x, const std::vector<std::string>& columns) const {
  if (columns != feature_names_) throw Error("ColumnMismatch", "feature columns differ from the trained model");
  return score(x);
}

std::vector<int> TrainedModel::predict(const Matrix& x, double threshold) const {
  return predict_from_scores(score(x), threshold);
}

nlohmann::ordered_json TrainedModel::to_json() const {
  nlohmann::ordered_json j;
  j["format_version"] = kModelFormatVersion;
  j["spec"] = spec_.to_json();
  j["feature_names"] = feature_names_;
  j["parameters"] = nlohmann::ordered_json::parse(impl_->parameters().dump());
  return j;
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
  if (!j.contains("format_version")) throw Error("BadModel", "missing format_version");
  if (j.at("format_version").get<int>() != kModelFormatVersion)
    throw Error("BadModel", "unsupported format_version " + j.at("format_version").dump());
  auto spec = ModelSpec::from_json(j.at("spec"));
  auto impl = make_classifier(spec.algorithm);
  try {
    impl->load(j.at("parameters"));
  } catch (const nlohmann::json::exception& e) {
    throw Error("BadModel", e.what());
  }
  return TrainedModel(std::move(spec), j.at("feature_names").get<std::vector<std::string>>(), std::move(impl));
}

void TrainedModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  out << to_json().dump() << '\n';
}

TrainedModel TrainedModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("BadModel", e.what());
  }
}

TrainedModel train(const ModelSpec& spec, const Matrix& x, std::span<const int> y,
                   std::vector<std::string> feature_names) {
  if (x.rows == 0 || x.cols == 0) throw Error("ShapeMismatch", "empty training matrix");
  if (y.size() != x.rows)
    throw Error("ShapeMismatch", std::to_string(y.size()) + " labels for " + std::to_string(x.rows) + " rows");
  if (x.data.size() != x.rows * x.cols) throw Error("ShapeMismatch", "matrix storage does not match its shape");
  if (feature_names.empty()) {
    for (std::size_t c = 0; c < x.cols; ++c) feature_names.push_back("f" + std::to_string(c));
  } else if (feature_names.size() != x.cols) {
    throw Error("ShapeMismatch", "feature name count differs from column count");
  }
  for (double v : x.data)
    if (!std::isfinite(v)) throw Error("NonFiniteInput", "training matrix contains a non-finite cell");
  std::size_t pos = 0;
  for (int label : y) {
    if (label != 0 && label != 1) throw Error("BadLabel", "labels must be 0 or 1");
    pos += static_cast<std::size_t>(label);
  }
  if ((pos == 0 || pos == y.size()) && spec.algorithm != Algorithm::LINEAR)
    throw Error("SingleClass", std::string(to_string(spec.algorithm)) + " needs both classes");

  auto impl = make_classifier(spec.algorithm);
  impl->fit(x, y, spec);
  return TrainedModel(spec, std::move(feature_names), std::move(impl));
}

std::vector<int> predict_from_scores(std::span<const double> scores, double threshold) {
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= threshold ? 1 : 0;
  return out;
}

}  // namespace etd
