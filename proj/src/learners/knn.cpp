#include <algorithm>
#include <cmath>
#include <numeric>

#include "classifiers.hpp"

namespace etd::detail {
namespace {

// Brute-force Euclidean; distance ties go to the lower training index.
class Knn final : public Classifier {
 public:
  void fit(const Matrix& x, std::span<const int> y, const ModelSpec& spec) override {
    k_ = static_cast<std::size_t>(spec.number("n_neighbors"));
    x_ = x;
    y_.assign(y.begin(), y.end());
  }

  std::vector<double> score(const Matrix& x) const override {
    const std::size_t k = std::min(k_, x_.rows);
    std::vector<double> out(x.rows);
    std::vector<std::pair<double, std::size_t>> dist(x_.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
      const auto q = x.row(i);
      for (std::size_t j = 0; j < x_.rows; ++j) {
        const auto r = x_.row(j);
        double d = 0.0;
        for (std::size_t c = 0; c < q.size(); ++c) d += (q[c] - r[c]) * (q[c] - r[c]);
        dist[j] = {d, j};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      std::size_t pos = 0;
      for (std::size_t n = 0; n < k; ++n) pos += y_[dist[n].second];
      // An even vote goes to class 0 at the 0.5 threshold.
      out[i] = 2 * pos == k ? std::nextafter(0.5, 0.0) : static_cast<double>(pos) / static_cast<double>(k);
    }
    return out;
  }

  nlohmann::json parameters() const override {
    return {{"n_neighbors", k_}, {"cols", x_.cols}, {"x", x_.data}, {"y", y_}};
  }

  void load(const nlohmann::json& params) override {
    k_ = params.at("n_neighbors").get<std::size_t>();
    x_.cols = params.at("cols").get<std::size_t>();
    x_.data = params.at("x").get<std::vector<double>>();
    x_.rows = x_.cols == 0 ? 0 : x_.data.size() / x_.cols;
    y_ = params.at("y").get<std::vector<int>>();
  }

 private:
  std::size_t k_ = 6;
  Matrix x_;
  std::vector<int> y_;
};

}  // namespace

std::unique_ptr<Classifier> make_knn() { return std::make_unique<Knn>(); }

}  // namespace etd::detail
