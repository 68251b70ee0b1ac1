#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "superlearn/error.hpp"
#include "superlearn/rng.hpp"

namespace superlearn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Predictor matrix, response and column names. Immutable once built; the
/// constructor rejects non-finite values and inconsistent shapes.
class Dataset {
 public:
  Dataset(Matrix x, Vector y, std::vector<std::string> feature_names)
      : x_(std::move(x)), y_(std::move(y)), names_(std::move(feature_names)) {
    if (x_.rows() != y_.size()) {
      throw length_mismatch_error("response has " + std::to_string(y_.size()) +
                                  " values but predictor matrix has " +
                                  std::to_string(x_.rows()) + " rows");
    }
    if (x_.rows() < 1) throw length_mismatch_error("dataset needs at least one row");
    if (x_.cols() < 1) throw length_mismatch_error("dataset needs at least one column");
    if (static_cast<Index>(names_.size()) != x_.cols()) {
      throw length_mismatch_error("expected " + std::to_string(x_.cols()) +
                                  " feature names, got " + std::to_string(names_.size()));
    }
    for (Index j = 0; j < x_.cols(); ++j) {
      for (Index i = 0; i < x_.rows(); ++i) {
        if (!std::isfinite(x_(i, j))) {
          throw non_finite_error(x_(i, j), static_cast<std::size_t>(i),
                                 static_cast<std::size_t>(j));
        }
      }
    }
    for (Index i = 0; i < y_.size(); ++i) {
      if (!std::isfinite(y_(i))) {
        throw non_finite_error(y_(i), static_cast<std::size_t>(i), static_cast<std::size_t>(x_.cols()));
      }
    }
  }

  const Matrix& x() const noexcept { return x_; }
  const Vector& y() const noexcept { return y_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  Index n() const noexcept { return x_.rows(); }
  Index p() const noexcept { return x_.cols(); }

  /// Rows selected by `rows`, in that order.
  Dataset subset(const std::vector<Index>& rows) const {
    Matrix xs(static_cast<Index>(rows.size()), x_.cols());
    Vector ys(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      xs.row(static_cast<Index>(k)) = x_.row(rows[k]);
      ys(static_cast<Index>(k)) = y_(rows[k]);
    }
    return Dataset(std::move(xs), std::move(ys), names_);
  }

 private:
  Matrix x_;
  Vector y_;
  std::vector<std::string> names_;
};

inline std::vector<std::string> default_feature_names(std::size_t p) {
  std::vector<std::string> names;
  names.reserve(p);
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

/// Builds a Dataset from row vectors. Empty `names` yields x1..xp.
inline Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                            const std::vector<double>& y,
                            std::vector<std::string> names = {}) {
  if (rows.empty()) throw length_mismatch_error("no rows");
  const std::size_t p = rows.front().size();
  if (y.size() != rows.size()) {
    throw length_mismatch_error("response has " + std::to_string(y.size()) + " values but " +
                                std::to_string(rows.size()) + " rows were given");
  }
  Matrix x(static_cast<Index>(rows.size()), static_cast<Index>(p));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != p) {
      throw length_mismatch_error("row " + std::to_string(i) + " has " +
                                  std::to_string(rows[i].size()) + " values, expected " +
                                  std::to_string(p));
    }
    for (std::size_t j = 0; j < p; ++j) x(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  if (names.empty()) names = default_feature_names(p);
  return Dataset(std::move(x), Eigen::Map<const Vector>(y.data(), static_cast<Index>(y.size())),
                 std::move(names));
}

/// Map from unit to fold (0-based) for V-fold cross-validation.
class FoldAssignment {
 public:
  FoldAssignment(std::vector<std::size_t> fold_of, std::size_t folds)
      : fold_of_(std::move(fold_of)), folds_(folds) {
    if (folds_ < 2 || folds_ > fold_of_.size()) throw bad_fold_count_error(fold_of_.size(), folds_);
    std::vector<std::size_t> sizes(folds_, 0);
    for (std::size_t v : fold_of_) {
      if (v >= folds_) throw config_error("fold index " + std::to_string(v) + " out of range");
      ++sizes[v];
    }
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    if (*lo == 0) throw config_error("fold assignment leaves a fold empty");
    if (*hi - *lo > 1) throw config_error("fold sizes differ by more than one");
  }

  std::size_t folds() const noexcept { return folds_; }
  std::size_t n() const noexcept { return fold_of_.size(); }
  std::size_t fold_of(std::size_t unit) const { return fold_of_.at(unit); }
  const std::vector<std::size_t>& assignment() const noexcept { return fold_of_; }

  std::vector<Index> held_out(std::size_t v) const {
    std::vector<Index> rows;
    for (std::size_t i = 0; i < fold_of_.size(); ++i)
      if (fold_of_[i] == v) rows.push_back(static_cast<Index>(i));
    return rows;
  }

  std::vector<Index> training(std::size_t v) const {
    std::vector<Index> rows;
    for (std::size_t i = 0; i < fold_of_.size(); ++i)
      if (fold_of_[i] != v) rows.push_back(static_cast<Index>(i));
    return rows;
  }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out(folds_, 0);
    for (std::size_t v : fold_of_) ++out[v];
    return out;
  }

  friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;

 private:
  std::vector<std::size_t> fold_of_;
  std::size_t folds_;
};

/// Random balanced partition: shuffle the units, then deal them round-robin.
inline FoldAssignment make_folds(std::size_t n, std::size_t folds, const RngStream& rng) {
  if (folds < 2 || folds > n) throw bad_fold_count_error(n, folds);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RandomGenerator gen(rng);
  gen.shuffle(order);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t k = 0; k < n; ++k) fold_of[order[k]] = k % folds;
  return FoldAssignment(std::move(fold_of), folds);
}

enum class LossKind { squared_error };

struct LossSpec {
  LossKind kind = LossKind::squared_error;
  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

inline std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::squared_error:
      return "squared_error";
  }
  return "unknown";
}

inline LossSpec parse_loss(const std::string& name) {
  if (name == "squared_error") return LossSpec{};
  throw config_error("unsupported loss '" + name + "' (only squared_error)");
}

/// N^-1 * sum (y_i - yhat_i)^2.
inline double mean_loss(const LossSpec& loss, const Vector& y, const Vector& yhat) {
  if (y.size() != yhat.size()) {
    throw length_mismatch_error("loss: y has " + std::to_string(y.size()) +
                                " values, prediction has " + std::to_string(yhat.size()));
  }
  if (y.size() == 0) throw length_mismatch_error("loss: empty input");
  switch (loss.kind) {
    case LossKind::squared_error:
      return (y - yhat).squaredNorm() / static_cast<double>(y.size());
  }
  return 0.0;
}

}  // namespace superlearn
