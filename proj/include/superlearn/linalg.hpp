#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "superlearn/core.hpp"

namespace superlearn {

/// Least-squares solution of A x ~ b by column-pivoted QR. Columns are
/// scaled to unit norm first; directions whose pivot falls below
/// `rel_threshold` of the largest one are treated as rank deficient and get
/// a zero coefficient.
inline Vector least_squares(const Matrix& a, const Vector& b, double rel_threshold = 1e-10) {
  const Index p = a.cols();
  if (p == 0) return Vector();
  Vector scale(p);
  for (Index j = 0; j < p; ++j) {
    const double norm = a.col(j).norm();
    scale(j) = norm > 0.0 ? norm : 1.0;
  }
  const Matrix scaled = a * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Matrix> qr(scaled);
  qr.setThreshold(rel_threshold);
  Vector coef = qr.solve(b);
  for (Index j = 0; j < p; ++j) {
    if (a.col(j).norm() == 0.0) coef(j) = 0.0;
  }
  return coef.cwiseQuotient(scale);
}

/// Column centering and scaling fitted on training data and reused at
/// prediction time. Zero-variance columns keep scale 1.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& x) {
    Standardizer s;
    const double n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean().transpose();
    s.scale.resize(x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
      const double ss = (x.col(j).array() - s.mean(j)).square().sum();
      const double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      s.scale(j) = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  Matrix apply(const Matrix& x) const {
    return (x.rowwise() - mean.transpose()) * scale.cwiseInverse().asDiagonal();
  }
};

}  // namespace superlearn
