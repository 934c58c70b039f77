#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "classifiers.hpp"
#include "etd/random.hpp"

namespace etd::detail {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Adam {
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  std::vector<MatrixXd> m, v;

  void init(const std::vector<MatrixXd*>& params) {
    for (auto* p : params) {
      m.push_back(MatrixXd::Zero(p->rows(), p->cols()));
      v.push_back(MatrixXd::Zero(p->rows(), p->cols()));
    }
  }

  void step(const std::vector<MatrixXd*>& params, const std::vector<MatrixXd>& grads) {
    ++t;
    const double corr = lr * std::sqrt(1.0 - std::pow(beta2, t)) / (1.0 - std::pow(beta1, t));
    for (std::size_t k = 0; k < params.size(); ++k) {
      m[k] = beta1 * m[k] + (1.0 - beta1) * grads[k];
      v[k] = beta2 * v[k] + (1.0 - beta2) * grads[k].cwiseProduct(grads[k]);
      *params[k] -= (corr * m[k].array() / (v[k].array().sqrt() + eps)).matrix();
    }
  }
};

// One ReLU hidden layer, sigmoid output, log loss, Adam.
class Mlp final : public Classifier {
 public:
  void fit(const Matrix& x, std::span<const int> y, const ModelSpec& spec) override {
    const auto h = static_cast<Eigen::Index>(spec.number("hidden_units"));
    const auto d = static_cast<Eigen::Index>(x.cols);
    const std::size_t n = x.rows;
    const double alpha = spec.number("alpha");
    const double tol = spec.number("tol");
    const auto patience = static_cast<int>(spec.number("n_iter_no_change"));
    const auto epochs = static_cast<int>(spec.number("max_epochs"));
    const std::size_t batch = std::clamp<std::size_t>(static_cast<std::size_t>(spec.number("batch_size")), 1, n);

    Rng init_rng(derive_seed(spec.seed, "mlp/init"));
    const auto glorot = [&](Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out) {
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      MatrixXd m(rows, cols);
      for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = init_rng.uniform(-limit, limit);
      return m;
    };
    w1_ = glorot(d, h, double(d), double(h));
    b1_ = glorot(1, h, double(d), double(h));
    w2_ = glorot(h, 1, double(h), 1.0);
    b2_ = glorot(1, 1, double(h), 1.0);

    Adam adam;
    adam.lr = spec.number("learning_rate");
    const std::vector<MatrixXd*> params{&w1_, &b1_, &w2_, &b2_};
    adam.init(params);

    Rng shuffle_rng(derive_seed(spec.seed, "mlp/shuffle"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    std::vector<MatrixXd> grads(4);

    for (int epoch = 0; epoch < epochs; ++epoch) {
      shuffle_rng.shuffle(order);
      double loss = 0.0;
      for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t end = std::min(n, start + batch);
        const auto b = static_cast<Eigen::Index>(end - start);
        MatrixXd xb(b, d);
        VectorXd yb(b);
        for (Eigen::Index r = 0; r < b; ++r) {
          const auto src = x.row(order[start + static_cast<std::size_t>(r)]);
          for (Eigen::Index c = 0; c < d; ++c) xb(r, c) = src[static_cast<std::size_t>(c)];
          yb(r) = y[order[start + static_cast<std::size_t>(r)]];
        }
        MatrixXd z1 = xb * w1_;
        z1.rowwise() += b1_.row(0);
        const MatrixXd a1 = z1.cwiseMax(0.0);
        VectorXd z2 = a1 * w2_;
        z2.array() += b2_(0, 0);
        VectorXd delta(b);
        for (Eigen::Index r = 0; r < b; ++r) {
          const double p = sigmoid(z2(r));
          const double pc = std::clamp(p, 1e-15, 1.0 - 1e-15);
          loss -= yb(r) * std::log(pc) + (1.0 - yb(r)) * std::log(1.0 - pc);
          delta(r) = (p - yb(r)) / static_cast<double>(b);
        }
        MatrixXd dz1 = delta * w2_.transpose();
        dz1 = dz1.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
        grads[0] = xb.transpose() * dz1 + (alpha / static_cast<double>(b)) * w1_;
        grads[1] = dz1.colwise().sum();
        grads[2] = a1.transpose() * delta + (alpha / static_cast<double>(b)) * w2_;
        grads[3] = MatrixXd::Constant(1, 1, delta.sum());
        adam.step(params, grads);
      }
      loss = loss / static_cast<double>(n) +
             alpha / (2.0 * static_cast<double>(n)) * (w1_.squaredNorm() + w2_.squaredNorm());
      if (!std::isfinite(loss)) break;
      if (loss > best - tol) {
        if (++stale >= patience) break;
      } else {
        stale = 0;
      }
      best = std::min(best, loss);
    }
  }

  std::vector<double> score(const Matrix& x) const override {
    std::vector<double> out(x.rows);
    const auto h = w1_.cols();
    VectorXd a(h);
    for (std::size_t i = 0; i < x.rows; ++i) {
      const auto r = x.row(i);
      for (Eigen::Index k = 0; k < h; ++k) {
        double z = b1_(0, k);
        for (std::size_t c = 0; c < r.size(); ++c) z += r[c] * w1_(static_cast<Eigen::Index>(c), k);
        a(k) = std::max(z, 0.0);
      }
      out[i] = sigmoid(a.dot(w2_.col(0)) + b2_(0, 0));
    }
    return out;
  }

  nlohmann::json parameters() const override {
    return {{"inputs", w1_.rows()}, {"hidden", w1_.cols()}, {"w1", flat(w1_)},
            {"b1", flat(b1_)},      {"w2", flat(w2_)},      {"b2", b2_(0, 0)}};
  }

  void load(const nlohmann::json& params) override {
    const auto d = params.at("inputs").get<Eigen::Index>();
    const auto h = params.at("hidden").get<Eigen::Index>();
    w1_ = unflat(params.at("w1"), d, h);
    b1_ = unflat(params.at("b1"), 1, h);
    w2_ = unflat(params.at("w2"), h, 1);
    b2_ = MatrixXd::Constant(1, 1, params.at("b2").get<double>());
  }

 private:
  static std::vector<double> flat(const MatrixXd& m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
    return out;
  }

  static MatrixXd unflat(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
    const auto v = j.get<std::vector<double>>();
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = v.at(static_cast<std::size_t>(i * cols + k));
    return m;
  }

  MatrixXd w1_, b1_, w2_, b2_;
};

}  // namespace

std::unique_ptr<Classifier> make_mlp() { return std::make_unique<Mlp>(); }

}  // namespace etd::detail
