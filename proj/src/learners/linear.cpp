#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "classifiers.hpp"

namespace etd::detail {
namespace {

Eigen::MatrixXd design(const Matrix& x) {
  Eigen::MatrixXd a(x.rows, x.cols + 1);
  for (std::size_t i = 0; i < x.rows; ++i) {
    a(i, 0) = 1.0;
    for (std::size_t c = 0; c < x.cols; ++c) a(i, c + 1) = x(i, c);
  }
  return a;
}

std::vector<double> linear_margin(const Matrix& x, const std::vector<double>& coef) {
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double m = coef[0];
    for (std::size_t c = 0; c < x.cols; ++c) m += coef[c + 1] * x(i, c);
    out[i] = m;
  }
  return out;
}

// L2-penalized logistic regression by Newton's method: minimizes
// C * sum(logloss) + 0.5 * |w|^2 with an unpenalized intercept, until the
// gradient norm drops below tol.
class Logistic final : public Classifier {
 public:
  void fit(const Matrix& x, std::span<const int> y, const ModelSpec& spec) override {
    const double c_reg = spec.number("C");
    const double tol = spec.number("tol");
    const auto max_iter = static_cast<int>(spec.number("max_iter"));
    const Eigen::MatrixXd a = design(x);
    const auto d = a.cols();
    Eigen::VectorXd yv(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) yv(i) = y[static_cast<std::size_t>(i)];

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd penalty = Eigen::VectorXd::Ones(d);
    penalty(0) = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      const Eigen::VectorXd z = a * w;
      Eigen::VectorXd p(z.size()), s(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        p(i) = sigmoid(z(i));
        s(i) = std::max(p(i) * (1.0 - p(i)), 1e-12);
      }
      const Eigen::VectorXd grad = c_reg * a.transpose() * (p - yv) + penalty.cwiseProduct(w);
      if (grad.norm() < tol) break;
      Eigen::MatrixXd hess = c_reg * a.transpose() * s.asDiagonal() * a;
      hess.diagonal() += penalty;
      hess.diagonal().array() += 1e-10;
      const Eigen::VectorXd step = hess.ldlt().solve(grad);
      w -= step;
      if (!step.allFinite()) break;
    }
    coef_.assign(w.data(), w.data() + d);
  }

  std::vector<double> score(const Matrix& x) const override {
    auto m = linear_margin(x, coef_);
    for (auto& v : m) v = sigmoid(v);
    return m;
  }

  nlohmann::json parameters() const override { return {{"coef", coef_}}; }
  void load(const nlohmann::json& params) override { coef_ = params.at("coef").get<std::vector<double>>(); }

 private:
  std::vector<double> coef_;
};

// Ordinary least squares on 0/1 targets; score clamped to [0, 1].
class Linear final : public Classifier {
 public:
  void fit(const Matrix& x, std::span<const int> y, const ModelSpec& spec) override {
    const Eigen::MatrixXd a = design(x);
    Eigen::VectorXd yv(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) yv(i) = y[static_cast<std::size_t>(i)];
    Eigen::MatrixXd gram = a.transpose() * a;
    gram.diagonal().array() += spec.number("ridge_jitter");
    const Eigen::VectorXd w = gram.ldlt().solve(a.transpose() * yv);
    coef_.assign(w.data(), w.data() + w.size());
  }

  std::vector<double> score(const Matrix& x) const override {
    auto m = linear_margin(x, coef_);
    for (auto& v : m) v = std::clamp(v, 0.0, 1.0);
    return m;
  }

  nlohmann::json parameters() const override { return {{"coef", coef_}}; }
  void load(const nlohmann::json& params) override { coef_ = params.at("coef").get<std::vector<double>>(); }

 private:
  std::vector<double> coef_;
};

}  // namespace

std::unique_ptr<Classifier> make_logistic() { return std::make_unique<Logistic>(); }
std::unique_ptr<Classifier> make_linear() { return std::make_unique<Linear>(); }

}  // namespace etd::detail
