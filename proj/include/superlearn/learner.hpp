#pragma once

#include <cmath>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "superlearn/core.hpp"
#include "superlearn/json_io.hpp"
#include "superlearn/learners/knn.hpp"
#include "superlearn/learners/linear.hpp"
#include "superlearn/learners/loess.hpp"
#include "superlearn/learners/model.hpp"
#include "superlearn/learners/neural_net.hpp"
#include "superlearn/learners/spline.hpp"
#include "superlearn/learners/tree.hpp"

namespace superlearn {

inline constexpr int kLearnerFormatVersion = 1;

/// A trained level-0 learner: its spec, trained parameters and a summary of
/// the training run. Immutable and cheap to copy (the parameters are shared).
class FittedLearner {
 public:
  FittedLearner(LearnerSpec spec, std::shared_ptr<const Model> model, TrainSummary summary, Index inputs)
      : spec_(std::move(spec)), model_(std::move(model)), summary_(summary), inputs_(inputs) {}

  const LearnerSpec& spec() const noexcept { return spec_; }
  const TrainSummary& train_summary() const noexcept { return summary_; }
  const Model& model() const noexcept { return *model_; }
  Index inputs() const noexcept { return inputs_; }

  Vector predict(const Matrix& x) const {
    if (x.cols() != inputs_) {
      throw dimension_mismatch_error(static_cast<std::size_t>(inputs_), static_cast<std::size_t>(x.cols()));
    }
    return model_->predict(x);
  }

 private:
  LearnerSpec spec_;
  std::shared_ptr<const Model> model_;
  TrainSummary summary_;
  Index inputs_;
};

namespace detail {

inline TreeControl read_tree_control(const ParamReader& r, std::size_t min_split, std::size_t max_depth, double cp,
                                     std::optional<std::size_t> min_leaf = std::nullopt) {
  TreeControl c;
  c.min_split = r.count("min_split", min_split, 2, 1u << 30);
  c.max_depth = r.count("max_depth", max_depth, 0, 10000);
  c.cp = r.real("cp", cp, 0.0, 1.0);
  const auto leaf_default = min_leaf.value_or(
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(c.min_split) / 3.0))));
  c.min_leaf = r.count("min_leaf", leaf_default, 1, 1u << 30);
  return c;
}

const std::vector<std::string> kTreeKeys{"min_split", "max_depth", "cp", "min_leaf"};

inline std::vector<std::string> with_tree_keys(std::vector<std::string> keys) {
  keys.insert(keys.end(), kTreeKeys.begin(), kTreeKeys.end());
  return keys;
}

}  // namespace detail

/**
 * Validates a spec's hyperparameters against its kind's schema without
 * fitting. Hyperparameter defaults:
 *   ridge          lambda (GCV when absent)
 *   lasso          lambda, or lambda_ratio * lambda_max (ratio 0.01)
 *   tree           min_split 20, min_leaf round(min_split/3), max_depth 30, cp 0.01
 *   bagging        n_trees 100 plus tree controls (min_split 20, cp 0.01)
 *   random_forest  n_trees 100, mtry max(1, p/3), min_split 10, min_leaf 5, cp 0, bootstrap on
 *   boosting       n_rounds 100, learning_rate 0.1, max_depth 3, min_split 10, min_leaf 5, cp 0
 *   knn            k 10
 *   loess          span 0.75
 *   gam_spline     df 3 (2, 3 or 4)
 *   neural_net     hidden 2, max_iter 500, weight_decay 0
 */
inline void validate_spec(const LearnerSpec& spec) {
  if (spec.label.empty()) throw config_error("learner label must be nonempty");
  using detail::with_tree_keys;
  switch (spec.kind) {
    case LearnerKind::ols:
    case LearnerKind::ols_interactions:
    case LearnerKind::stepwise:
      ParamReader(spec, {});
      return;
    case LearnerKind::ridge: {
      ParamReader r(spec, {"lambda"});
      r.real("lambda", 0.0, 0.0, 1e300);
      return;
    }
    case LearnerKind::lasso: {
      ParamReader r(spec, {"lambda", "lambda_ratio"});
      r.real("lambda", 0.0, 0.0, 1e300);
      r.real("lambda_ratio", 0.01, 0.0, 1.0);
      return;
    }
    case LearnerKind::tree: {
      ParamReader r(spec, detail::kTreeKeys);
      detail::read_tree_control(r, 20, 30, 0.01);
      return;
    }
    case LearnerKind::bagging: {
      ParamReader r(spec, with_tree_keys({"n_trees"}));
      r.count("n_trees", 100, 1, 100000);
      detail::read_tree_control(r, 20, 30, 0.01);
      return;
    }
    case LearnerKind::random_forest: {
      ParamReader r(spec, with_tree_keys({"n_trees", "mtry", "bootstrap"}));
      r.count("n_trees", 100, 1, 100000);
      r.count("mtry", 1, 1, 1u << 30);
      r.flag("bootstrap", true);
      detail::read_tree_control(r, 10, 1000, 0.0, 5);
      return;
    }
    case LearnerKind::boosting: {
      ParamReader r(spec, with_tree_keys({"n_rounds", "learning_rate"}));
      r.count("n_rounds", 100, 1, 1000000);
      r.real("learning_rate", 0.1, 1e-12, 1.0);
      detail::read_tree_control(r, 10, 3, 0.0, 5);
      return;
    }
    case LearnerKind::knn: {
      ParamReader r(spec, {"k"});
      r.count("k", 10, 1, 1u << 30);
      return;
    }
    case LearnerKind::loess: {
      ParamReader r(spec, {"span"});
      const double span = r.real("span", 0.75, 0.0, 10.0);
      if (!(span > 0.0)) throw config_error("learner '" + spec.label + "': span must be positive");
      return;
    }
    case LearnerKind::gam_spline: {
      ParamReader r(spec, {"df"});
      r.count("df", 3, 2, 4);
      return;
    }
    case LearnerKind::neural_net: {
      ParamReader r(spec, {"hidden", "max_iter", "weight_decay"});
      r.count("hidden", 2, 1, 64);
      r.count("max_iter", 500, 1, 1000000);
      r.real("weight_decay", 0.0, 0.0, 1e6);
      return;
    }
  }
}

/// Labels must be nonempty and unique; every spec must validate.
inline void validate_library(const std::vector<LearnerSpec>& library) {
  if (library.empty()) throw config_error("learner library is empty");
  std::set<std::string> labels;
  for (const auto& spec : library) {
    validate_spec(spec);
    if (!labels.insert(spec.label).second) throw config_error("duplicate learner label '" + spec.label + "'");
  }
}

/// Trains one learner. Deterministic given (spec, data, rng).
inline FittedLearner fit(const LearnerSpec& spec, const Dataset& data, const RngStream& rng) {
  validate_spec(spec);
  const Matrix& x = data.x();
  const Vector& y = data.y();
  const auto n = static_cast<std::size_t>(data.n());
  std::shared_ptr<const Model> model;
  TrainSummary summary;
  summary.n_train = n;
  using detail::with_tree_keys;
  switch (spec.kind) {
    case LearnerKind::ols:
      model = fit_ols(x, y);
      break;
    case LearnerKind::ols_interactions:
      model = fit_ols(x, y, true);
      break;
    case LearnerKind::ridge: {
      ParamReader r(spec, {"lambda"});
      model = fit_ridge(x, y, r.optional("lambda").value_or(-1.0));
      break;
    }
    case LearnerKind::lasso: {
      ParamReader r(spec, {"lambda", "lambda_ratio"});
      std::size_t sweeps = 0;
      model = fit_lasso(x, y, r.optional("lambda").value_or(-1.0), r.real("lambda_ratio", 0.01, 0.0, 1.0), &sweeps);
      summary.iterations = sweeps;
      break;
    }
    case LearnerKind::stepwise:
      model = fit_stepwise(x, y);
      break;
    case LearnerKind::tree: {
      ParamReader r(spec, detail::kTreeKeys);
      model = fit_tree(x, y, detail::read_tree_control(r, 20, 30, 0.01));
      break;
    }
    case LearnerKind::bagging: {
      ParamReader r(spec, with_tree_keys({"n_trees"}));
      model = fit_forest(x, y, detail::read_tree_control(r, 20, 30, 0.01), r.count("n_trees", 100, 1, 100000), true,
                         rng);
      break;
    }
    case LearnerKind::random_forest: {
      ParamReader r(spec, with_tree_keys({"n_trees", "mtry", "bootstrap"}));
      TreeControl c = detail::read_tree_control(r, 10, 1000, 0.0, 5);
      const auto p = static_cast<std::size_t>(data.p());
      c.mtry = std::min(p, r.count("mtry", std::max<std::size_t>(1, p / 3), 1, 1u << 30));
      model = fit_forest(x, y, c, r.count("n_trees", 100, 1, 100000), r.flag("bootstrap", true), rng);
      break;
    }
    case LearnerKind::boosting: {
      ParamReader r(spec, with_tree_keys({"n_rounds", "learning_rate"}));
      model = fit_boosting(x, y, detail::read_tree_control(r, 10, 3, 0.0, 5), r.count("n_rounds", 100, 1, 1000000),
                           r.real("learning_rate", 0.1, 1e-12, 1.0));
      break;
    }
    case LearnerKind::knn: {
      ParamReader r(spec, {"k"});
      model = fit_knn(x, y, r.count("k", 10, 1, 1u << 30));
      break;
    }
    case LearnerKind::loess: {
      ParamReader r(spec, {"span"});
      model = fit_loess(x, y, r.real("span", 0.75, 0.0, 10.0));
      break;
    }
    case LearnerKind::gam_spline: {
      ParamReader r(spec, {"df"});
      model = fit_gam(x, y, r.count("df", 3, 2, 4));
      break;
    }
    case LearnerKind::neural_net: {
      ParamReader r(spec, {"hidden", "max_iter", "weight_decay"});
      const NeuralNetFit nn = fit_neural_net(x, y, r.count("hidden", 2, 1, 64), r.count("max_iter", 500, 1, 1000000),
                                             r.real("weight_decay", 0.0, 0.0, 1e6), rng);
      model = nn.model;
      summary.converged = nn.converged;
      summary.iterations = nn.iterations;
      break;
    }
  }
  const Vector fitted = model->predict(x);
  if (!fitted.allFinite()) throw fit_failure_error(to_string(spec.kind), "non-finite fitted values");
  summary.train_loss = mean_loss(LossSpec{}, y, fitted);
  return FittedLearner(spec, std::move(model), summary, data.p());
}

inline Vector predict(const FittedLearner& fitted, const Matrix& x_new) { return fitted.predict(x_new); }

inline Json to_json(const TrainSummary& s) {
  return Json{{"n_train", s.n_train}, {"train_loss", s.train_loss}, {"converged", s.converged}, {"iterations", s.iterations}};
}

inline Json to_json(const FittedLearner& f) {
  return Json{{"format_version", kLearnerFormatVersion},
              {"spec", to_json(f.spec())},
              {"inputs", f.inputs()},
              {"params", f.model().params_to_json()},
              {"train_summary", to_json(f.train_summary())}};
}

inline FittedLearner fitted_learner_from_json(const Json& j) {
  try {
    if (j.at("format_version").get<int>() != kLearnerFormatVersion) {
      throw Error("ModelFormat", ErrorCategory::data, "unsupported learner format_version");
    }
    const LearnerSpec spec = learner_spec_from_json(j.at("spec"));
    const Json& params = j.at("params");
    std::shared_ptr<const Model> model;
    switch (spec.kind) {
      case LearnerKind::ols:
      case LearnerKind::ols_interactions:
      case LearnerKind::ridge:
      case LearnerKind::lasso:
      case LearnerKind::stepwise:
        model = LinearModel::from_json(params);
        break;
      case LearnerKind::tree:
      case LearnerKind::bagging:
      case LearnerKind::random_forest:
      case LearnerKind::boosting:
        model = TreeEnsembleModel::from_json(params);
        break;
      case LearnerKind::knn:
        model = KnnModel::from_json(params);
        break;
      case LearnerKind::loess:
        model = LoessModel::from_json(params);
        break;
      case LearnerKind::gam_spline:
        model = GamModel::from_json(params);
        break;
      case LearnerKind::neural_net:
        model = NeuralNetModel::from_json(params);
        break;
    }
    const Json& s = j.at("train_summary");
    TrainSummary summary{s.at("n_train").get<std::size_t>(), s.at("train_loss").get<double>(),
                         s.at("converged").get<bool>(), s.at("iterations").get<std::size_t>()};
    return FittedLearner(spec, std::move(model), summary, j.at("inputs").get<Index>());
  } catch (const Json::exception& e) {
    throw Error("ModelFormat", ErrorCategory::data, std::string("malformed learner: ") + e.what());
  }
}

}  // namespace superlearn
