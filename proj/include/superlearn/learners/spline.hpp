#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "superlearn/learners/model.hpp"
#include "superlearn/linalg.hpp"

namespace superlearn {

/// Type-7 sample quantile of already sorted values.
inline double sorted_quantile(const std::vector<double>& sorted, double prob) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/**
 * Natural cubic spline basis without intercept, in truncated-power form:
 * column 0 is the (rescaled) input, column k+1 is d_k - d_{K-2} where
 * d_k(u) = ((u - t_k)^3_+ - (u - t_{K-1})^3_+) / (t_{K-1} - t_k).
 *
 * Boundary knots sit at the data range and df - 1 interior knots at evenly
 * spaced quantiles, giving df columns. Inputs are mapped to [0, 1] over the
 * boundary knots before evaluation. The basis is linear outside the range.
 */
class NaturalSplineBasis {
 public:
  NaturalSplineBasis() = default;
  explicit NaturalSplineBasis(std::vector<double> knots) : knots_(std::move(knots)) {}

  static NaturalSplineBasis fit(const Vector& x, std::size_t df) {
    if (df < 2 || df > 4) {
      throw Error("DegenerateInput", ErrorCategory::config, "spline df must be 2, 3 or 4, got " + std::to_string(df));
    }
    std::vector<double> sorted(x.data(), x.data() + x.size());
    std::sort(sorted.begin(), sorted.end());
    const auto distinct = static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
    if (distinct < df + 1) {
      throw Error("DegenerateInput", ErrorCategory::fit,
                  "spline with df=" + std::to_string(df) + " needs at least " + std::to_string(df + 1) +
                      " distinct values, got " + std::to_string(distinct));
    }
    sorted.assign(x.data(), x.data() + x.size());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> knots{sorted.front()};
    for (std::size_t j = 1; j < df; ++j) {
      const double q = sorted_quantile(sorted, static_cast<double>(j) / static_cast<double>(df));
      // Heavily tied data can put quantiles on top of each other or on the range.
      if (q > knots.back() && q < sorted.back()) knots.push_back(q);
    }
    knots.push_back(sorted.back());
    return NaturalSplineBasis(std::move(knots));
  }

  std::size_t columns() const noexcept { return knots_.size() - 1; }
  const std::vector<double>& knots() const noexcept { return knots_; }

  Matrix evaluate(const Vector& x) const {
    const double lo = knots_.front();
    const double width = knots_.back() - lo;
    const std::size_t k_count = knots_.size();
    std::vector<double> t(k_count);
    for (std::size_t k = 0; k < k_count; ++k) t[k] = (knots_[k] - lo) / width;
    auto cube_plus = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
    auto d = [&](double u, std::size_t k) {
      return (cube_plus(u - t[k]) - cube_plus(u - t[k_count - 1])) / (t[k_count - 1] - t[k]);
    };
    Matrix out(x.size(), static_cast<Index>(columns()));
    for (Index i = 0; i < x.size(); ++i) {
      const double u = (x(i) - lo) / width;
      out(i, 0) = u;
      const double last = d(u, k_count - 2);
      for (std::size_t k = 0; k + 2 < k_count; ++k) out(i, static_cast<Index>(k + 1)) = d(u, k) - last;
    }
    return out;
  }

 private:
  std::vector<double> knots_;
};

/// Natural cubic spline basis for `x` with `df` columns.
inline Matrix spline_basis(const Vector& x, std::size_t df) { return NaturalSplineBasis::fit(x, df).evaluate(x); }

/// Additive model: a natural spline per feature (a linear term for features
/// with too few distinct values), fitted jointly by least squares.
class GamModel final : public Model {
 public:
  GamModel(std::vector<NaturalSplineBasis> bases, std::vector<bool> linear, double intercept, Vector coef)
      : bases_(std::move(bases)), linear_(std::move(linear)), intercept_(intercept), coef_(std::move(coef)) {}

  static Matrix design(const Matrix& x, const std::vector<NaturalSplineBasis>& bases, const std::vector<bool>& linear) {
    Index cols = 0;
    for (std::size_t j = 0; j < bases.size(); ++j) cols += linear[j] ? 1 : static_cast<Index>(bases[j].columns());
    Matrix out(x.rows(), cols);
    Index at = 0;
    for (std::size_t j = 0; j < bases.size(); ++j) {
      const Index jj = static_cast<Index>(j);
      if (linear[j]) {
        out.col(at++) = x.col(jj);
      } else {
        const Matrix b = bases[j].evaluate(x.col(jj));
        out.middleCols(at, b.cols()) = b;
        at += b.cols();
      }
    }
    return out;
  }

  Vector predict(const Matrix& x) const override {
    return (design(x, bases_, linear_) * coef_).array() + intercept_;
  }

  Json params_to_json() const override {
    Json features = Json::array();
    for (std::size_t j = 0; j < bases_.size(); ++j) {
      features.push_back(Json{{"linear", static_cast<bool>(linear_[j])}, {"knots", bases_[j].knots()}});
    }
    return Json{{"features", features}, {"intercept", intercept_}, {"coef", to_json(coef_)}};
  }

  static std::shared_ptr<GamModel> from_json(const Json& j) {
    std::vector<NaturalSplineBasis> bases;
    std::vector<bool> linear;
    for (const auto& f : j.at("features")) {
      linear.push_back(f.at("linear").get<bool>());
      bases.emplace_back(f.at("knots").get<std::vector<double>>());
    }
    return std::make_shared<GamModel>(std::move(bases), std::move(linear), j.at("intercept").get<double>(),
                                      vector_from_json(j.at("coef")));
  }

 private:
  std::vector<NaturalSplineBasis> bases_;
  std::vector<bool> linear_;
  double intercept_;
  Vector coef_;
};

inline std::shared_ptr<GamModel> fit_gam(const Matrix& x, const Vector& y, std::size_t df) {
  std::vector<NaturalSplineBasis> bases;
  std::vector<bool> linear;
  for (Index j = 0; j < x.cols(); ++j) {
    const Vector col = x.col(j);
    std::set<double> distinct(col.data(), col.data() + col.size());
    if (distinct.size() >= df + 1) {
      bases.push_back(NaturalSplineBasis::fit(col, df));
      linear.push_back(false);
    } else {
      bases.emplace_back();
      linear.push_back(true);
    }
  }
  const Matrix d = GamModel::design(x, bases, linear);
  const Vector mean = d.colwise().mean().transpose();
  const Matrix centered = d.rowwise() - mean.transpose();
  const Vector yc = y.array() - y.mean();
  const Vector coef = least_squares(centered, yc);
  const double intercept = y.mean() - mean.dot(coef);
  return std::make_shared<GamModel>(std::move(bases), std::move(linear), intercept, coef);
}

}  // namespace superlearn
