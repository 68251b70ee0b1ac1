#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "superlearn/learners/model.hpp"
#include "superlearn/linalg.hpp"

namespace superlearn {

/// k-nearest-neighbour regression on z-scored features (Euclidean distance).
/// Equidistant neighbours are ranked by training row index.
class KnnModel final : public Model {
 public:
  KnnModel(std::size_t k, Standardizer standardizer, Matrix train_x, Vector train_y)
      : k_(k), st_(std::move(standardizer)), train_z_(st_.apply(train_x)), train_x_(std::move(train_x)),
        train_y_(std::move(train_y)) {}

  Vector predict(const Matrix& x) const override {
    const Matrix z = st_.apply(x);
    const Index n = train_z_.rows();
    std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n));
    Vector out(x.rows());
    for (Index i = 0; i < z.rows(); ++i) {
      for (Index r = 0; r < n; ++r) dist[static_cast<std::size_t>(r)] = {(train_z_.row(r) - z.row(i)).squaredNorm(), r};
      const auto kth = dist.begin() + static_cast<std::ptrdiff_t>(k_);
      std::partial_sort(dist.begin(), kth, dist.end());
      double sum = 0.0;
      for (auto it = dist.begin(); it != kth; ++it) sum += train_y_(it->second);
      out(i) = sum / static_cast<double>(k_);
    }
    return out;
  }

  Json params_to_json() const override {
    return Json{{"k", k_},
                {"mean", to_json(st_.mean)},
                {"scale", to_json(st_.scale)},
                {"train_x", to_json(train_x_)},
                {"train_y", to_json(train_y_)}};
  }

  static std::shared_ptr<KnnModel> from_json(const Json& j) {
    Standardizer st{vector_from_json(j.at("mean")), vector_from_json(j.at("scale"))};
    const Index p = st.mean.size();
    return std::make_shared<KnnModel>(j.at("k").get<std::size_t>(), st, matrix_from_json(j.at("train_x"), p),
                                      vector_from_json(j.at("train_y")));
  }

 private:
  std::size_t k_;
  Standardizer st_;
  Matrix train_z_;
  Matrix train_x_;
  Vector train_y_;
};

inline std::shared_ptr<KnnModel> fit_knn(const Matrix& x, const Vector& y, std::size_t k) {
  if (k > static_cast<std::size_t>(x.rows())) {
    throw fit_failure_error("knn", "k=" + std::to_string(k) + " exceeds n=" + std::to_string(x.rows()));
  }
  return std::make_shared<KnnModel>(k, Standardizer::fit(x), x, y);
}

}  // namespace superlearn
