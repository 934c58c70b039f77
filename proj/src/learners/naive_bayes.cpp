#include <algorithm>
#include <cmath>
#include <numbers>

#include "classifiers.hpp"

namespace etd::detail {
namespace {

class GaussianNb final : public Classifier {
 public:
  void fit(const Matrix& x, std::span<const int> y, const ModelSpec& spec) override {
    const std::size_t d = x.cols;
    double max_var = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      double m = 0.0;
      for (std::size_t i = 0; i < x.rows; ++i) m += x(i, c);
      m /= static_cast<double>(x.rows);
      double v = 0.0;
      for (std::size_t i = 0; i < x.rows; ++i) v += (x(i, c) - m) * (x(i, c) - m);
      max_var = std::max(max_var, v / static_cast<double>(x.rows));
    }
    const double eps = spec.number("var_smoothing") * max_var;

    for (int k = 0; k < 2; ++k) {
      auto& cls = classes_[k];
      cls.mean.assign(d, 0.0);
      cls.var.assign(d, 0.0);
      std::size_t n = 0;
      for (std::size_t i = 0; i < x.rows; ++i) {
        if (y[i] != k) continue;
        ++n;
        for (std::size_t c = 0; c < d; ++c) cls.mean[c] += x(i, c);
      }
      for (auto& m : cls.mean) m /= static_cast<double>(n);
      for (std::size_t i = 0; i < x.rows; ++i) {
        if (y[i] != k) continue;
        for (std::size_t c = 0; c < d; ++c) cls.var[c] += (x(i, c) - cls.mean[c]) * (x(i, c) - cls.mean[c]);
      }
      for (auto& v : cls.var) v = v / static_cast<double>(n) + eps;
      // Guard for all-constant training data (eps == 0).
      for (auto& v : cls.var) v = std::max(v, 1e-300);
      cls.log_prior = std::log(static_cast<double>(n) / static_cast<double>(x.rows));
    }
  }

  std::vector<double> score(const Matrix& x) const override {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
      double ll[2];
      for (int k = 0; k < 2; ++k) {
        const auto& cls = classes_[k];
        double s = cls.log_prior;
        for (std::size_t c = 0; c < x.cols; ++c) {
          const double diff = x(i, c) - cls.mean[c];
          s -= 0.5 * std::log(2.0 * std::numbers::pi * cls.var[c]) + diff * diff / (2.0 * cls.var[c]);
        }
        ll[k] = s;
      }
      const double top = std::max(ll[0], ll[1]);
      const double e0 = std::exp(ll[0] - top), e1 = std::exp(ll[1] - top);
      out[i] = e1 / (e0 + e1);
    }
    return out;
  }

  nlohmann::json parameters() const override {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : classes_) out.push_back({{"mean", c.mean}, {"var", c.var}, {"log_prior", c.log_prior}});
    return {{"classes", out}};
  }

  void load(const nlohmann::json& params) override {
    for (int k = 0; k < 2; ++k) {
      const auto& j = params.at("classes").at(k);
      classes_[k].mean = j.at("mean").get<std::vector<double>>();
      classes_[k].var = j.at("var").get<std::vector<double>>();
      classes_[k].log_prior = j.at("log_prior").get<double>();
    }
  }

 private:
  struct ClassStats {
    std::vector<double> mean, var;
    double log_prior = 0.0;
  };
  ClassStats classes_[2];
};

}  // namespace

std::unique_ptr<Classifier> make_gaussian_nb() { return std::make_unique<GaussianNb>(); }

}  // namespace etd::detail
