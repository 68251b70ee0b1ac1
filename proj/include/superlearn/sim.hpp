#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "superlearn/cv.hpp"
#include "superlearn/metric_table.hpp"
#include "superlearn/metrics.hpp"
#include "superlearn/parallel.hpp"

namespace superlearn {

/// E[y | x] for the four single-covariate simulation designs.
inline double sim_conditional_mean(int sim_id, double x) {
  auto ind = [](bool c) { return c ? 1.0 : 0.0; };
  switch (sim_id) {
    case 1:
      return -2.0 * ind(x < -3.0) + 2.55 * ind(x > -2.0) - 2.0 * ind(x > 0.0) + 4.0 * ind(x > 2.0) - ind(x > 3.0);
    case 2:
      return 6.0 + 0.4 * x - 0.36 * x * x + 0.005 * x * x * x;
    case 3:
      return 2.83 * std::sin(std::numbers::pi / 2.0 * x);
    case 4:
      return x > 0.0 ? 4.0 * std::sin(3.0 * std::numbers::pi * x) : 0.0;
    default:
      throw Error("BadSimId", ErrorCategory::config, "simulation id must be 1-4, got " + std::to_string(sim_id));
  }
}

/// n draws of x ~ U(-4, 4) and y = E[y|x] + N(0, 1). With `noiseless` the
/// same random draws are consumed but the error term is dropped.
inline Dataset generate(int sim_id, std::size_t n, const RngStream& rng, bool noiseless = false) {
  sim_conditional_mean(sim_id, 0.0);  // validates the id
  if (n < 1) throw length_mismatch_error("generate: n must be positive");
  RandomGenerator gen(rng);
  Matrix x(static_cast<Index>(n), 1);
  Vector y(static_cast<Index>(n));
  for (Index i = 0; i < static_cast<Index>(n); ++i) {
    x(i, 0) = gen.uniform(-4.0, 4.0);
    const double eps = gen.normal();
    y(i) = sim_conditional_mean(sim_id, x(i, 0)) + (noiseless ? 0.0 : eps);
  }
  return Dataset(std::move(x), std::move(y), {"x"});
}

struct SimConfig {
  int sim_id = 1;
  std::size_t n_train = 100;
  std::size_t n_test = 10000;
  std::size_t reps = 100;
  std::vector<std::size_t> train_sizes;  // used by run_sample_size_study
  std::vector<LearnerSpec> library;
  std::size_t folds = 10;
  std::uint64_t master_seed = 1;
  std::size_t threads = 1;
  MetaSolver solver = MetaSolver::simplex_exact;
  /// Called with every fitted super learner; may run on worker threads.
  std::function<void(const SuperLearnerModel&)> on_model;
};

inline std::string sim_group(int sim_id, std::size_t n_train) {
  return "sim" + std::to_string(sim_id) + "/n" + std::to_string(n_train);
}

inline void validate(const SimConfig& c) {
  sim_conditional_mean(c.sim_id, 0.0);
  if (c.reps < 1) throw config_error("reps must be at least 1");
  if (c.n_test < 2) throw config_error("n_test must be at least 2");
  if (c.folds < 2 || c.folds > c.n_train) throw bad_fold_count_error(c.n_train, c.folds);
  validate_library(c.library);
}

/// Stream for replicate `rep` of (sim_id, n_train).
inline RngStream sim_rep_stream(const SimConfig& c, std::size_t rep) {
  return RngStream(c.master_seed)
      .child(StreamTag::sim_rep, static_cast<std::uint64_t>(c.sim_id))
      .child(StreamTag::sample_size, c.n_train)
      .child(StreamTag::sim_rep, rep);
}

/**
 * Repeated train/test evaluation: per replicate, fresh training and test
 * samples from independent streams, super_learn on the training sample,
 * and test-set R^2 for every full-sample library member and for the super
 * learner ("SL"). Replicates run in parallel.
 */
inline MetricTable run_sim_study(const SimConfig& config) {
  validate(config);
  const std::string group = sim_group(config.sim_id, config.n_train);
  std::vector<std::vector<MetricRow>> per_rep(config.reps);
  parallel_for(config.reps, config.threads, [&](std::size_t rep) {
    const RngStream stream = sim_rep_stream(config, rep);
    const Dataset train = generate(config.sim_id, config.n_train, stream.child(StreamTag::sim_train, 0));
    const Dataset test = generate(config.sim_id, config.n_test, stream.child(StreamTag::sim_test, 0));
    CvOptions options;
    options.solver = config.solver;
    const SuperLearnerModel model =
        super_learn(config.library, train, config.folds, LossSpec{}, stream.child(StreamTag::sim_fit, 0), options);
    if (config.on_model) config.on_model(model);
    const Matrix preds = library_predictions(model, test.x());
    for (Index m = 0; m < preds.cols(); ++m) {
      per_rep[rep].push_back({group, model.weights.labels[static_cast<std::size_t>(m)], rep, r_squared(test.y(), preds.col(m))});
    }
    per_rep[rep].push_back({group, kSuperLearnerLabel, rep, r_squared(test.y(), combine(model.weights, preds))});
  });
  MetricTable table;
  table.metric = "r_squared";
  // Library order first, then SL, replicate-major within each label.
  std::vector<std::string> labels;
  for (const auto& spec : config.library) labels.push_back(spec.label);
  labels.push_back(kSuperLearnerLabel);
  for (const auto& label : labels)
    for (const auto& rows : per_rep)
      for (const auto& row : rows)
        if (row.label == label) table.rows.push_back(row);
  summarize_table(table);
  return table;
}

/// run_sim_study once per training size; groups are keyed by size.
inline MetricTable run_sample_size_study(const SimConfig& config) {
  if (config.train_sizes.empty()) throw config_error("train_sizes must be nonempty");
  MetricTable table;
  table.metric = "r_squared";
  for (std::size_t n : config.train_sizes) {
    SimConfig c = config;
    c.n_train = n;
    const MetricTable part = run_sim_study(c);
    table.rows.insert(table.rows.end(), part.rows.begin(), part.rows.end());
    table.summary.insert(table.summary.end(), part.summary.begin(), part.summary.end());
  }
  return table;
}

}  // namespace superlearn
