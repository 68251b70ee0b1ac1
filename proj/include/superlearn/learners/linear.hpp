#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "superlearn/learners/model.hpp"
#include "superlearn/linalg.hpp"

namespace superlearn {

/// Appends every pairwise product x_j * x_k (j < k) after the main terms.
inline Matrix expand_interactions(const Matrix& x) {
  const Index p = x.cols();
  Matrix out(x.rows(), p + p * (p - 1) / 2);
  out.leftCols(p) = x;
  Index col = p;
  for (Index j = 0; j < p; ++j)
    for (Index k = j + 1; k < p; ++k) out.col(col++) = x.col(j).cwiseProduct(x.col(k));
  return out;
}

inline Dataset expand_interactions(const Dataset& data) {
  std::vector<std::string> names = data.feature_names();
  const auto& base = data.feature_names();
  for (std::size_t j = 0; j < base.size(); ++j)
    for (std::size_t k = j + 1; k < base.size(); ++k) names.push_back(base[j] + ":" + base[k]);
  return Dataset(expand_interactions(data.x()), data.y(), std::move(names));
}

/// y = intercept + x * coef, optionally on the interaction-expanded design.
class LinearModel final : public Model {
 public:
  LinearModel(double intercept, Vector coef, bool interactions = false, double lambda = 0.0)
      : intercept_(intercept), coef_(std::move(coef)), interactions_(interactions), lambda_(lambda) {}

  Vector predict(const Matrix& x) const override {
    const Vector lin = interactions_ ? Vector(expand_interactions(x) * coef_) : Vector(x * coef_);
    return lin.array() + intercept_;
  }

  Json params_to_json() const override {
    return Json{{"intercept", intercept_},
                {"coef", to_json(coef_)},
                {"interactions", interactions_},
                {"lambda", lambda_}};
  }

  static std::shared_ptr<LinearModel> from_json(const Json& j) {
    return std::make_shared<LinearModel>(j.at("intercept").get<double>(), vector_from_json(j.at("coef")),
                                         j.at("interactions").get<bool>(), j.at("lambda").get<double>());
  }

  double intercept() const noexcept { return intercept_; }
  const Vector& coef() const noexcept { return coef_; }
  double lambda() const noexcept { return lambda_; }

 private:
  double intercept_;
  Vector coef_;
  bool interactions_;
  double lambda_;
};

namespace detail {

struct Centered {
  Matrix x;
  Vector y;
  Vector x_mean;
  double y_mean;
};

inline Centered center(const Matrix& x, const Vector& y) {
  Centered c;
  c.x_mean = x.colwise().mean().transpose();
  c.y_mean = y.mean();
  c.x = x.rowwise() - c.x_mean.transpose();
  c.y = y.array() - c.y_mean;
  return c;
}

inline double residual_ss(const Matrix& x, const Vector& y, const std::vector<Index>& cols) {
  const Matrix sub = x(Eigen::all, cols);
  const Centered c = center(sub, y);
  const Vector beta = least_squares(c.x, c.y);
  return (c.y - c.x * beta).squaredNorm();
}

}  // namespace detail

/// Ordinary least squares with intercept. Rank-deficient directions get zero
/// coefficients, so collinear designs never fail.
inline std::shared_ptr<LinearModel> fit_ols(const Matrix& x, const Vector& y, bool interactions = false) {
  const Matrix design = interactions ? expand_interactions(x) : x;
  const detail::Centered c = detail::center(design, y);
  const Vector beta = least_squares(c.x, c.y);
  const double intercept = c.y_mean - c.x_mean.dot(beta);
  return std::make_shared<LinearModel>(intercept, beta, interactions);
}

/// Generalized cross-validation choice of the ridge penalty over a log grid
/// from 1e-3 to 1e3 (standardized-feature scale).
inline double ridge_gcv_lambda(const Matrix& xs, const Vector& yc) {
  Eigen::JacobiSVD<Matrix> svd(xs, Eigen::ComputeThinU);
  const Vector d2 = svd.singularValues().array().square();
  const Vector uty = svd.matrixU().transpose() * yc;
  const double n = static_cast<double>(xs.rows());
  const double rss_perp = std::max(0.0, yc.squaredNorm() - uty.squaredNorm());
  double best_lambda = 1.0;
  double best_score = std::numeric_limits<double>::infinity();
  for (int step = -30; step <= 30; ++step) {
    const double lambda = std::pow(10.0, step / 10.0);
    double rss = rss_perp;
    double df = 0.0;
    for (Index k = 0; k < d2.size(); ++k) {
      const double shrink = lambda / (d2(k) + lambda);
      rss += shrink * shrink * uty(k) * uty(k);
      df += d2(k) / (d2(k) + lambda);
    }
    const double denom = n - df - 1.0;
    if (denom <= 0.0) continue;
    const double score = n * rss / (denom * denom);
    if (score < best_score) {
      best_score = score;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

/// Ridge on standardized features: minimizes ||yc - Xs b||^2 + lambda ||b||^2.
/// A negative lambda requests the GCV choice.
inline std::shared_ptr<LinearModel> fit_ridge(const Matrix& x, const Vector& y, double lambda) {
  const Standardizer st = Standardizer::fit(x);
  const Matrix xs = st.apply(x);
  const Vector yc = y.array() - y.mean();
  if (lambda < 0.0) lambda = ridge_gcv_lambda(xs, yc);
  const Index n = xs.rows();
  const Index p = xs.cols();
  Matrix aug = Matrix::Zero(n + p, p);
  aug.topRows(n) = xs;
  aug.bottomRows(p).diagonal().setConstant(std::sqrt(lambda));
  Vector rhs = Vector::Zero(n + p);
  rhs.head(n) = yc;
  const Vector beta_std = least_squares(aug, rhs);
  const Vector beta = beta_std.cwiseQuotient(st.scale);
  const double intercept = y.mean() - st.mean.dot(beta);
  return std::make_shared<LinearModel>(intercept, beta, false, lambda);
}

inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

/// Lasso by cyclic coordinate descent on standardized features (population
/// sd), objective (2n)^-1 ||yc - Xs b||^2 + lambda ||b||_1. When `lambda` is
/// negative it is set to lambda_ratio * lambda_max.
inline std::shared_ptr<LinearModel> fit_lasso(const Matrix& x, const Vector& y, double lambda,
                                              double lambda_ratio, std::size_t* sweeps_out = nullptr) {
  const Index n = x.rows();
  const Index p = x.cols();
  const double nd = static_cast<double>(n);
  const Vector mean = x.colwise().mean().transpose();
  Vector scale(p);
  Matrix xs(n, p);
  for (Index j = 0; j < p; ++j) {
    const Vector c = x.col(j).array() - mean(j);
    const double sd = std::sqrt(c.squaredNorm() / nd);
    scale(j) = sd > 0.0 ? sd : 1.0;
    xs.col(j) = sd > 0.0 ? Vector(c / sd) : Vector::Zero(n);
  }
  const Vector yc = y.array() - y.mean();
  if (lambda < 0.0) {
    const double lambda_max = (xs.transpose() * yc).cwiseAbs().maxCoeff() / nd;
    lambda = lambda_ratio * lambda_max;
  }
  Vector beta = Vector::Zero(p);
  Vector resid = yc;
  std::size_t sweep = 0;
  for (; sweep < 100000; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double col_ss = xs.col(j).squaredNorm() / nd;
      if (col_ss == 0.0) continue;
      const double rho = xs.col(j).dot(resid) / nd + col_ss * beta(j);
      const double updated = soft_threshold(rho, lambda) / col_ss;
      const double delta = updated - beta(j);
      if (delta != 0.0) {
        resid -= delta * xs.col(j);
        beta(j) = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < 1e-10) break;
  }
  if (sweeps_out) *sweeps_out = sweep + 1;
  const Vector coef = beta.cwiseQuotient(scale);
  const double intercept = y.mean() - mean.dot(coef);
  return std::make_shared<LinearModel>(intercept, coef, false, lambda);
}

/// Forward selection over main terms by AIC = n log(RSS/n) + 2k. Candidates
/// are scanned in feature order and replace the incumbent only on strict
/// improvement, so ties go to the lowest feature index.
inline std::shared_ptr<LinearModel> fit_stepwise(const Matrix& x, const Vector& y) {
  const Index n = x.rows();
  const Index p = x.cols();
  const double nd = static_cast<double>(n);
  auto aic = [&](double rss, std::size_t k) {
    return nd * std::log(std::max(rss, std::numeric_limits<double>::min()) / nd) + 2.0 * static_cast<double>(k);
  };
  std::vector<Index> chosen;
  std::vector<bool> used(static_cast<std::size_t>(p), false);
  double current = aic((y.array() - y.mean()).square().sum(), 1);
  while (static_cast<Index>(chosen.size()) < p && static_cast<Index>(chosen.size()) + 2 < n) {
    Index best = -1;
    double best_aic = current;
    for (Index j = 0; j < p; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      std::vector<Index> trial = chosen;
      trial.push_back(j);
      const double value = aic(detail::residual_ss(x, y, trial), trial.size() + 1);
      if (value < best_aic) {
        best_aic = value;
        best = j;
      }
    }
    if (best < 0) break;
    chosen.push_back(best);
    used[static_cast<std::size_t>(best)] = true;
    current = best_aic;
  }
  Vector coef = Vector::Zero(p);
  if (!chosen.empty()) {
    const Matrix sub = x(Eigen::all, chosen);
    const detail::Centered c = detail::center(sub, y);
    const Vector beta = least_squares(c.x, c.y);
    for (std::size_t k = 0; k < chosen.size(); ++k) coef(chosen[k]) = beta(static_cast<Index>(k));
  }
  const double intercept = y.mean() - x.colwise().mean().dot(coef.transpose());
  return std::make_shared<LinearModel>(intercept, coef);
}

}  // namespace superlearn
