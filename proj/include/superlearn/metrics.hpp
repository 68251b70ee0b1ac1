#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "superlearn/core.hpp"
#include "superlearn/learners/spline.hpp"

namespace superlearn {

/// 1 - SS_res / SS_tot against the mean of y. Negative values are returned
/// as-is.
inline double r_squared(const Vector& y, const Vector& yhat) {
  if (y.size() != yhat.size()) throw length_mismatch_error("r_squared: length mismatch");
  if (y.size() < 2) throw length_mismatch_error("r_squared needs at least two observations");
  const double total = (y.array() - y.mean()).square().sum();
  if (total == 0.0) throw Error("DegenerateResponse", ErrorCategory::data, "response has zero variance");
  return 1.0 - (y - yhat).squaredNorm() / total;
}

inline double cv_mse(const Vector& z_col, const Vector& y) { return mean_loss(LossSpec{}, y, z_col); }

/// Divides every entry by the reference learner's value. The reference maps
/// to exactly 1.0.
inline std::map<std::string, double> relative_mse(const std::map<std::string, double>& cvmse,
                                                  const std::string& reference) {
  const auto it = cvmse.find(reference);
  if (it == cvmse.end()) throw Error("MissingReference", ErrorCategory::config, "reference learner '" + reference + "' absent");
  if (!(it->second > 0.0)) {
    throw Error("ZeroReference", ErrorCategory::data, "reference learner '" + reference + "' has zero CV-MSE");
  }
  std::map<std::string, double> out;
  for (const auto& [label, value] : cvmse) out[label] = value / it->second;
  return out;
}

inline double geometric_mean(const std::vector<double>& values) {
  if (values.empty()) throw length_mismatch_error("geometric_mean of no values");
  double log_sum = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw Error("NonPositive", ErrorCategory::data, "geometric mean needs positive values");
    log_sum += std::log(v);
  }
  const double gm = std::exp(log_sum / static_cast<double>(values.size()));
  // Rounding in log/exp can push the result a hair outside the data range.
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return std::clamp(gm, *lo, *hi);
}

struct Summary {
  double mean = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

/// Mean and type-7 quartiles.
inline Summary summarize(std::vector<double> values) {
  if (values.empty()) throw length_mismatch_error("summarize of no values");
  double sum = 0.0;
  for (double v : values) sum += v;
  std::sort(values.begin(), values.end());
  return Summary{sum / static_cast<double>(values.size()), sorted_quantile(values, 0.25), sorted_quantile(values, 0.75)};
}

}  // namespace superlearn
