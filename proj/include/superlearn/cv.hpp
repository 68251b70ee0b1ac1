#pragma once

#include <algorithm>
#include <atomic>
#include <optional>
#include <string>
#include <vector>

#include "superlearn/core.hpp"
#include "superlearn/learner.hpp"
#include "superlearn/meta.hpp"
#include "superlearn/parallel.hpp"

namespace superlearn {

struct CvOptions {
  std::size_t threads = 1;
  MetaSolver solver = MetaSolver::simplex_exact;
  /// When set, incremented once per learner training call.
  std::atomic<std::size_t>* fit_counter = nullptr;
};

struct DroppedLearner {
  std::string label;
  std::string reason;

  friend bool operator==(const DroppedLearner&, const DroppedLearner&) = default;
};

/// n x M matrix of cross-validated predictions: entry (i, m) comes from
/// learner m trained with unit i's fold held out.
struct CvPredictionMatrix {
  Matrix z;
  std::vector<std::string> labels;
  std::vector<std::size_t> library_index;  // surviving learners' positions in the library
  FoldAssignment folds;
  std::vector<DroppedLearner> dropped;
};

namespace detail {

inline RngStream learner_stream(const RngStream& rng, std::size_t learner, StreamTag phase, std::size_t index) {
  return rng.child(StreamTag::learner, learner).child(phase, index);
}

inline FittedLearner counted_fit(const LearnerSpec& spec, const Dataset& data, const RngStream& rng,
                                 const CvOptions& options) {
  if (options.fit_counter) options.fit_counter->fetch_add(1, std::memory_order_relaxed);
  return fit(spec, data, rng);
}

// Learner failures are data-dependent (FitFailure, DegenerateInput, ...);
// configuration errors are not and must propagate.
inline bool is_learner_failure(const Error& e) { return e.category() != ErrorCategory::config; }

}  // namespace detail

/**
 * Trains every library member on each fold complement and predicts the
 * held-out fold. A learner that fails on any fold is dropped from the whole
 * matrix and recorded in `dropped`. The (learner, fold) grid runs in
 * parallel; each cell uses the stream rng/learner m/fold v, so the result
 * does not depend on scheduling.
 */
inline CvPredictionMatrix cross_validated_predictions(const std::vector<LearnerSpec>& library, const Dataset& data,
                                                      const FoldAssignment& folds, const RngStream& rng,
                                                      const CvOptions& options = {}) {
  validate_library(library);
  if (folds.n() != static_cast<std::size_t>(data.n())) {
    throw length_mismatch_error("fold assignment covers " + std::to_string(folds.n()) + " units but data has " +
                                std::to_string(data.n()));
  }
  const std::size_t m_count = library.size();
  const std::size_t v_count = folds.folds();
  std::vector<std::vector<Index>> held(v_count), train(v_count);
  for (std::size_t v = 0; v < v_count; ++v) {
    held[v] = folds.held_out(v);
    train[v] = folds.training(v);
  }

  std::vector<Vector> cell(m_count * v_count);
  std::vector<std::optional<std::string>> failure(m_count * v_count);
  parallel_for(m_count * v_count, options.threads, [&](std::size_t task) {
    const std::size_t m = task / v_count;
    const std::size_t v = task % v_count;
    try {
      const Dataset training = data.subset(train[v]);
      const FittedLearner f =
          detail::counted_fit(library[m], training, detail::learner_stream(rng, m, StreamTag::fold, v), options);
      Vector pred = f.predict(data.x()(held[v], Eigen::all));
      if (!pred.allFinite()) {
        failure[task] = "non-finite prediction on fold " + std::to_string(v + 1);
      } else {
        cell[task] = std::move(pred);
      }
    } catch (const Error& e) {
      if (!detail::is_learner_failure(e)) throw;
      failure[task] = e.id() + " on fold " + std::to_string(v + 1) + ": " + e.what();
    }
  });

  CvPredictionMatrix out{Matrix(), {}, {}, folds, {}};
  for (std::size_t m = 0; m < m_count; ++m) {
    std::optional<std::string> reason;
    for (std::size_t v = 0; v < v_count && !reason; ++v) reason = failure[m * v_count + v];
    if (reason) {
      out.dropped.push_back({library[m].label, *reason});
    } else {
      out.library_index.push_back(m);
      out.labels.push_back(library[m].label);
    }
  }
  if (out.library_index.empty()) {
    throw Error("AllLearnersFailed", ErrorCategory::fit, "every learner in the library failed during cross-validation");
  }
  out.z.resize(data.n(), static_cast<Index>(out.library_index.size()));
  for (std::size_t c = 0; c < out.library_index.size(); ++c) {
    const std::size_t m = out.library_index[c];
    for (std::size_t v = 0; v < v_count; ++v) {
      const Vector& pred = cell[m * v_count + v];
      for (std::size_t k = 0; k < held[v].size(); ++k) out.z(held[v][k], static_cast<Index>(c)) = pred(static_cast<Index>(k));
    }
  }
  return out;
}

/// Level-1 weights plus the level-0 learners refitted on the full sample.
struct SuperLearnerModel {
  SimplexWeights weights;
  std::vector<FittedLearner> fitted;
  Vector cv_risks;
  double sl_cv_risk = 0.0;
  std::size_t folds_used = 0;
  std::vector<std::size_t> fold_assignment;
  LossSpec loss;
  MetaSolver solver = MetaSolver::simplex_exact;
  std::vector<std::string> feature_names;
  std::vector<DroppedLearner> dropped;
};

/**
 * The super learner: balanced random folds, the cross-validated prediction
 * matrix Z, convex weights minimizing ||Z alpha - y||^2, then one full-sample
 * refit per surviving learner (V + 1 trainings each).
 */
inline SuperLearnerModel super_learn(const std::vector<LearnerSpec>& library, const Dataset& data, std::size_t folds,
                                     const LossSpec& loss, const RngStream& rng, const CvOptions& options = {}) {
  validate_library(library);
  const FoldAssignment assignment = make_folds(static_cast<std::size_t>(data.n()), folds, rng.child(StreamTag::folds, 0));
  CvPredictionMatrix cv = cross_validated_predictions(library, data, assignment, rng, options);

  // Full-sample refits.
  const std::size_t kept = cv.library_index.size();
  std::vector<std::optional<FittedLearner>> refit(kept);
  std::vector<std::optional<std::string>> refit_failure(kept);
  parallel_for(kept, options.threads, [&](std::size_t c) {
    const std::size_t m = cv.library_index[c];
    try {
      refit[c] = detail::counted_fit(library[m], data, detail::learner_stream(rng, m, StreamTag::refit, 0), options);
    } catch (const Error& e) {
      if (!detail::is_learner_failure(e)) throw;
      refit_failure[c] = e.id() + " on full-sample refit: " + e.what();
    }
  });

  SuperLearnerModel model;
  model.loss = loss;
  model.solver = options.solver;
  model.folds_used = folds;
  model.fold_assignment = assignment.assignment();
  model.feature_names = data.feature_names();
  model.dropped = cv.dropped;
  std::vector<Index> columns;
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < kept; ++c) {
    if (refit_failure[c]) {
      model.dropped.push_back({cv.labels[c], *refit_failure[c]});
      continue;
    }
    columns.push_back(static_cast<Index>(c));
    labels.push_back(cv.labels[c]);
    model.fitted.push_back(*refit[c]);
  }
  if (columns.empty()) {
    throw Error("AllLearnersFailed", ErrorCategory::fit, "every learner failed on the full-sample refit");
  }
  const Matrix z = cv.z(Eigen::all, columns);
  model.weights = solve_weights(options.solver, z, data.y(), labels);
  model.cv_risks.resize(z.cols());
  for (Index c = 0; c < z.cols(); ++c) model.cv_risks(c) = mean_loss(loss, data.y(), z.col(c));
  model.sl_cv_risk = mean_loss(loss, data.y(), combine(model.weights, z));
  return model;
}

/// Predictions of every full-sample learner, one column per learner.
inline Matrix library_predictions(const SuperLearnerModel& model, const Matrix& x_new) {
  Matrix out(x_new.rows(), static_cast<Index>(model.fitted.size()));
  for (std::size_t m = 0; m < model.fitted.size(); ++m) out.col(static_cast<Index>(m)) = model.fitted[m].predict(x_new);
  return out;
}

inline Vector sl_predict(const SuperLearnerModel& model, const Matrix& x_new) {
  const auto p = static_cast<Index>(model.feature_names.size());
  if (x_new.cols() != p) throw dimension_mismatch_error(static_cast<std::size_t>(p), static_cast<std::size_t>(x_new.cols()));
  return combine(model.weights, library_predictions(model, x_new));
}

struct RiskRow {
  std::string label;
  double cv_risk = 0.0;
  std::optional<double> weight;  // empty for the super learner row
};

inline constexpr const char* kSuperLearnerLabel = "SL";

/// Per-learner CV risk and weight plus an "SL" row, ascending by risk.
inline std::vector<RiskRow> cv_risk_table(const SuperLearnerModel& model) {
  std::vector<RiskRow> rows;
  for (std::size_t m = 0; m < model.fitted.size(); ++m) {
    rows.push_back({model.weights.labels[m], model.cv_risks(static_cast<Index>(m)), model.weights.alpha(static_cast<Index>(m))});
  }
  rows.push_back({kSuperLearnerLabel, model.sl_cv_risk, std::nullopt});
  std::stable_sort(rows.begin(), rows.end(), [](const RiskRow& a, const RiskRow& b) { return a.cv_risk < b.cv_risk; });
  return rows;
}

inline constexpr int kModelFormatVersion = 1;

inline Json to_json(const SuperLearnerModel& model) {
  Json learners = Json::array();
  for (const auto& f : model.fitted) learners.push_back(to_json(f));
  Json dropped = Json::array();
  for (const auto& d : model.dropped) dropped.push_back(Json{{"label", d.label}, {"reason", d.reason}});
  const auto& r = model.weights.solve_report;
  return Json{{"format_version", kModelFormatVersion},
              {"kind", "superlearner_model"},
              {"feature_names", model.feature_names},
              {"loss", to_string(model.loss.kind)},
              {"meta_solver", to_string(model.solver)},
              {"weights",
               {{"labels", model.weights.labels},
                {"alpha", to_json(model.weights.alpha)},
                {"solve_report",
                 {{"iterations", r.iterations}, {"final_objective", r.final_objective}, {"kkt_residual", r.kkt_residual}}}}},
              {"learners", learners},
              {"cv_risks", to_json(model.cv_risks)},
              {"sl_cv_risk", model.sl_cv_risk},
              {"folds", {{"V", model.folds_used}, {"assignment", model.fold_assignment}}},
              {"dropped", dropped}};
}

inline SuperLearnerModel superlearner_model_from_json(const Json& j) {
  try {
    if (j.at("kind").get<std::string>() != "superlearner_model" ||
        j.at("format_version").get<int>() != kModelFormatVersion) {
      throw Error("ModelFormat", ErrorCategory::data, "not a supported super learner model file");
    }
    SuperLearnerModel model;
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.loss = parse_loss(j.at("loss").get<std::string>());
    model.solver = parse_meta_solver(j.at("meta_solver").get<std::string>());
    const Json& w = j.at("weights");
    model.weights.labels = w.at("labels").get<std::vector<std::string>>();
    model.weights.alpha = vector_from_json(w.at("alpha"));
    const Json& r = w.at("solve_report");
    model.weights.solve_report = SolveReport{r.at("iterations").get<std::size_t>(), r.at("final_objective").get<double>(),
                                             r.at("kkt_residual").get<double>()};
    for (const auto& f : j.at("learners")) model.fitted.push_back(fitted_learner_from_json(f));
    model.cv_risks = vector_from_json(j.at("cv_risks"));
    model.sl_cv_risk = j.at("sl_cv_risk").get<double>();
    model.folds_used = j.at("folds").at("V").get<std::size_t>();
    model.fold_assignment = j.at("folds").at("assignment").get<std::vector<std::size_t>>();
    for (const auto& d : j.at("dropped")) model.dropped.push_back({d.at("label").get<std::string>(), d.at("reason").get<std::string>()});
    if (model.fitted.size() != model.weights.labels.size() ||
        static_cast<Index>(model.fitted.size()) != model.weights.alpha.size()) {
      throw Error("ModelFormat", ErrorCategory::data, "weights and learners disagree in length");
    }
    return model;
  } catch (const Json::exception& e) {
    throw Error("ModelFormat", ErrorCategory::data, std::string("malformed model: ") + e.what());
  }
}

}  // namespace superlearn
