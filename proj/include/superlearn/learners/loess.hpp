#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "superlearn/learners/model.hpp"
#include "superlearn/linalg.hpp"

namespace superlearn {

inline double tricube(double u) {
  if (u >= 1.0) return 0.0;
  const double t = 1.0 - u * u * u;
  return t * t * t;
}

/// Local linear regression with tricube weights on z-scored features.
///
/// For span <= 1 the neighbourhood is the floor(span * n) nearest training
/// points and the bandwidth is the distance to the farthest of them. For
/// span > 1 every point is used and the bandwidth is the maximum distance
/// times span^(1/p).
class LoessModel final : public Model {
 public:
  LoessModel(double span, Standardizer standardizer, Matrix train_x, Vector train_y)
      : span_(span), st_(std::move(standardizer)), train_z_(st_.apply(train_x)), train_x_(std::move(train_x)),
        train_y_(std::move(train_y)) {}

  /// Tricube weights of every training point for one query row.
  Vector weights(const Eigen::RowVectorXd& z0) const {
    const Index n = train_z_.rows();
    Vector dist(n);
    for (Index r = 0; r < n; ++r) dist(r) = (train_z_.row(r) - z0).norm();
    double bandwidth;
    if (span_ > 1.0) {
      bandwidth = dist.maxCoeff() * std::pow(span_, 1.0 / static_cast<double>(train_z_.cols()));
    } else {
      const auto q = std::clamp<Index>(static_cast<Index>(std::floor(span_ * static_cast<double>(n))), 1, n);
      std::vector<double> sorted(dist.data(), dist.data() + n);
      std::nth_element(sorted.begin(), sorted.begin() + (q - 1), sorted.end());
      bandwidth = sorted[static_cast<std::size_t>(q - 1)];
    }
    Vector w(n);
    for (Index r = 0; r < n; ++r) {
      w(r) = bandwidth > 0.0 ? tricube(dist(r) / bandwidth) : (dist(r) == 0.0 ? 1.0 : 0.0);
    }
    return w;
  }

  Vector predict(const Matrix& x) const override {
    const Matrix z = st_.apply(x);
    const Index p = z.cols();
    Vector out(x.rows());
    for (Index i = 0; i < z.rows(); ++i) {
      const Eigen::RowVectorXd z0 = z.row(i);
      const Vector w = weights(z0);
      std::vector<Index> active;
      for (Index r = 0; r < w.size(); ++r)
        if (w(r) > 0.0) active.push_back(r);
      if (active.empty()) {
        // Only possible when every neighbour sits exactly on the bandwidth.
        out(i) = nearest_value(z0);
        continue;
      }
      Matrix design(static_cast<Index>(active.size()), p + 1);
      Vector rhs(static_cast<Index>(active.size()));
      for (std::size_t k = 0; k < active.size(); ++k) {
        const Index r = active[k];
        const double sw = std::sqrt(w(r));
        design(static_cast<Index>(k), 0) = sw;
        design.row(static_cast<Index>(k)).tail(p) = sw * (train_z_.row(r) - z0);
        rhs(static_cast<Index>(k)) = sw * train_y_(r);
      }
      out(i) = least_squares(design, rhs)(0);
    }
    return out;
  }

  Json params_to_json() const override {
    return Json{{"span", span_},
                {"mean", to_json(st_.mean)},
                {"scale", to_json(st_.scale)},
                {"train_x", to_json(train_x_)},
                {"train_y", to_json(train_y_)}};
  }

  static std::shared_ptr<LoessModel> from_json(const Json& j) {
    Standardizer st{vector_from_json(j.at("mean")), vector_from_json(j.at("scale"))};
    const Index p = st.mean.size();
    return std::make_shared<LoessModel>(j.at("span").get<double>(), st, matrix_from_json(j.at("train_x"), p),
                                        vector_from_json(j.at("train_y")));
  }

  const Matrix& train_z() const noexcept { return train_z_; }
  const Standardizer& standardizer() const noexcept { return st_; }

 private:
  double nearest_value(const Eigen::RowVectorXd& z0) const {
    Index best = 0;
    double best_d = (train_z_.row(0) - z0).squaredNorm();
    for (Index r = 1; r < train_z_.rows(); ++r) {
      const double d = (train_z_.row(r) - z0).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = r;
      }
    }
    return train_y_(best);
  }

  double span_;
  Standardizer st_;
  Matrix train_z_;
  Matrix train_x_;
  Vector train_y_;
};

inline std::shared_ptr<LoessModel> fit_loess(const Matrix& x, const Vector& y, double span) {
  return std::make_shared<LoessModel>(span, Standardizer::fit(x), x, y);
}

}  // namespace superlearn
