#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "superlearn/core.hpp"
#include "superlearn/json_io.hpp"

namespace superlearn {

enum class LearnerKind {
  ols,
  ols_interactions,
  ridge,
  lasso,
  stepwise,
  tree,
  bagging,
  random_forest,
  boosting,
  knn,
  loess,
  gam_spline,
  neural_net,
};

inline constexpr std::array<std::pair<LearnerKind, std::string_view>, 13> kLearnerKindNames{{
    {LearnerKind::ols, "ols"},
    {LearnerKind::ols_interactions, "ols_interactions"},
    {LearnerKind::ridge, "ridge"},
    {LearnerKind::lasso, "lasso"},
    {LearnerKind::stepwise, "stepwise"},
    {LearnerKind::tree, "tree"},
    {LearnerKind::bagging, "bagging"},
    {LearnerKind::random_forest, "random_forest"},
    {LearnerKind::boosting, "boosting"},
    {LearnerKind::knn, "knn"},
    {LearnerKind::loess, "loess"},
    {LearnerKind::gam_spline, "gam_spline"},
    {LearnerKind::neural_net, "neural_net"},
}};

inline std::string to_string(LearnerKind kind) {
  for (const auto& [k, name] : kLearnerKindNames)
    if (k == kind) return std::string(name);
  return "unknown";
}

inline LearnerKind parse_learner_kind(std::string_view name) {
  for (const auto& [k, n] : kLearnerKindNames)
    if (n == name) return k;
  throw config_error("unknown learner kind '" + std::string(name) + "'");
}

/// Numeric hyperparameters keyed by name. Booleans are stored as 0/1.
using Hyperparameters = std::map<std::string, double>;

struct LearnerSpec {
  LearnerKind kind = LearnerKind::ols;
  Hyperparameters hyperparameters;
  std::string label;

  friend bool operator==(const LearnerSpec&, const LearnerSpec&) = default;
};

inline Json to_json(const LearnerSpec& spec) {
  Json params = Json::object();
  for (const auto& [k, v] : spec.hyperparameters) params[k] = v;
  return Json{{"kind", to_string(spec.kind)}, {"label", spec.label}, {"params", params}};
}

inline LearnerSpec learner_spec_from_json(const Json& j) {
  if (!j.is_object()) throw config_error("learner entry must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "kind" && key != "label" && key != "params")
      throw config_error("unknown learner key '" + key + "'");
  }
  if (!j.contains("kind") || !j["kind"].is_string()) throw config_error("learner entry needs a 'kind'");
  LearnerSpec spec;
  spec.kind = parse_learner_kind(j["kind"].get<std::string>());
  spec.label = j.value("label", to_string(spec.kind));
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw config_error("learner params must be an object");
    for (const auto& [key, value] : j["params"].items()) {
      if (value.is_boolean()) {
        spec.hyperparameters[key] = value.get<bool>() ? 1.0 : 0.0;
      } else if (value.is_number()) {
        spec.hyperparameters[key] = value.get<double>();
      } else {
        throw config_error("hyperparameter '" + key + "' of '" + spec.label + "' must be numeric");
      }
    }
  }
  return spec;
}

/// Reads hyperparameters against a kind's schema: unknown keys and
/// out-of-range values are ConfigErrors.
class ParamReader {
 public:
  ParamReader(const LearnerSpec& spec, std::vector<std::string> allowed)
      : spec_(spec), allowed_(std::move(allowed)) {
    for (const auto& [key, value] : spec.hyperparameters) {
      if (std::find(allowed_.begin(), allowed_.end(), key) == allowed_.end()) {
        throw config_error("learner '" + spec.label + "' (" + to_string(spec.kind) +
                           "): unknown hyperparameter '" + key + "'");
      }
      if (!std::isfinite(value)) {
        throw config_error("learner '" + spec.label + "': hyperparameter '" + key + "' is not finite");
      }
    }
  }

  std::optional<double> optional(const std::string& key) const {
    const auto it = spec_.hyperparameters.find(key);
    if (it == spec_.hyperparameters.end()) return std::nullopt;
    return it->second;
  }

  double real(const std::string& key, double fallback, double lo, double hi) const {
    const double v = optional(key).value_or(fallback);
    if (v < lo || v > hi) {
      throw config_error("learner '" + spec_.label + "': " + key + "=" + std::to_string(v) +
                         " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return v;
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t lo, std::size_t hi) const {
    const double v = real(key, static_cast<double>(fallback), static_cast<double>(lo), static_cast<double>(hi));
    if (v != std::floor(v)) throw config_error("learner '" + spec_.label + "': " + key + " must be an integer");
    return static_cast<std::size_t>(v);
  }

  bool flag(const std::string& key, bool fallback) const {
    const double v = optional(key).value_or(fallback ? 1.0 : 0.0);
    if (v != 0.0 && v != 1.0) throw config_error("learner '" + spec_.label + "': " + key + " must be boolean");
    return v == 1.0;
  }

 private:
  const LearnerSpec& spec_;
  std::vector<std::string> allowed_;
};

struct TrainSummary {
  std::size_t n_train = 0;
  double train_loss = 0.0;
  bool converged = true;
  std::size_t iterations = 0;

  friend bool operator==(const TrainSummary&, const TrainSummary&) = default;
};

/// Trained parameters of one learner kind.
class Model {
 public:
  virtual ~Model() = default;
  /// Row-wise predictions for an m x p matrix (p already validated).
  virtual Vector predict(const Matrix& x) const = 0;
  virtual Json params_to_json() const = 0;
};

}  // namespace superlearn
