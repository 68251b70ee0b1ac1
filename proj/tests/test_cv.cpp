#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

#include "test_util.hpp"

using namespace superlearn;
using testutil::error_id;
using testutil::spec;

namespace {

Dataset sim_data(int sim, std::size_t n, std::uint64_t seed) { return generate(sim, n, RngStream(seed)); }

std::vector<LearnerSpec> mixed_library() {
  return {spec(LearnerKind::ols, "glm"), spec(LearnerKind::knn, "knn", {{"k", 5}}),
          spec(LearnerKind::bagging, "bag", {{"n_trees", 10}}), spec(LearnerKind::neural_net, "nn", {{"max_iter", 50}}),
          spec(LearnerKind::gam_spline, "gam")};
}

}  // namespace

TEST(CrossValidation, KnnLeaveOneOutMatchesNearestNeighbourScan) {
  const Matrix x = testutil::random_matrix(12, 1, 1, -4, 4);
  const Vector y = testutil::random_vector(12, 2, -3, 3);
  const Dataset d(x, y, {"x"});
  const FoldAssignment loo = make_folds(12, 12, RngStream(3));
  const auto cv = cross_validated_predictions({spec(LearnerKind::knn, "nn1", {{"k", 1}})}, d, loo, RngStream(4));
  for (Index i = 0; i < 12; ++i) {
    Index best = -1;
    for (Index j = 0; j < 12; ++j) {
      if (j == i) continue;
      if (best < 0 || std::abs(x(j, 0) - x(i, 0)) < std::abs(x(best, 0) - x(i, 0))) best = j;
    }
    EXPECT_EQ(cv.z(i, 0), y(best)) << i;
    EXPECT_NE(cv.z(i, 0), y(i));
  }
}

TEST(CrossValidation, OwnLabelNeverLeaks) {
  const Matrix x = testutil::random_matrix(12, 1, 5, -4, 4);
  Vector y = testutil::random_vector(12, 6);
  const FoldAssignment loo = make_folds(12, 12, RngStream(3));
  const LearnerSpec nn1 = spec(LearnerKind::knn, "nn1", {{"k", 1}});
  for (Index i = 0; i < 12; ++i) {
    Vector poisoned = y;
    poisoned(i) = 1e6;
    const auto cv = cross_validated_predictions({nn1}, Dataset(x, poisoned, {"x"}), loo, RngStream(4));
    EXPECT_NE(cv.z(i, 0), 1e6);
  }
}

TEST(CrossValidation, OlsMatchesIndependentComplementFits) {
  const Matrix x = testutil::random_matrix(6, 1, 7, -2, 2);
  const Vector y = testutil::random_vector(6, 8, -2, 2);
  const FoldAssignment folds = make_folds(6, 3, RngStream(9));
  const auto cv = cross_validated_predictions({spec(LearnerKind::ols, "glm")}, Dataset(x, y, {"x"}), folds, RngStream(1));
  for (std::size_t v = 0; v < 3; ++v) {
    // Closed-form simple regression on the four training points.
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (Index i : folds.training(v)) {
      sx += x(i, 0);
      sy += y(i);
      sxx += x(i, 0) * x(i, 0);
      sxy += x(i, 0) * y(i);
      n += 1;
    }
    EXPECT_EQ(n, 4);
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    for (Index i : folds.held_out(v)) EXPECT_NEAR(cv.z(i, 0), intercept + slope * x(i, 0), 1e-10);
  }
}

TEST(CrossValidation, HeldOutResponsesDoNotAffectTheirRows) {
  const Dataset d = sim_data(2, 60, 10);
  const FoldAssignment folds = make_folds(60, 5, RngStream(11));
  const auto base = cross_validated_predictions(mixed_library(), d, folds, RngStream(12));
  Vector y = d.y();
  for (Index i : folds.held_out(2)) y(i) += 50.0;
  const auto poisoned = cross_validated_predictions(mixed_library(), Dataset(d.x(), y, d.feature_names()), folds, RngStream(12));
  for (Index i : folds.held_out(2)) EXPECT_EQ(base.z.row(i), poisoned.z.row(i));
}

TEST(CrossValidation, DuplicateSpecsGiveIdenticalColumns) {
  const Dataset d = sim_data(1, 50, 13);
  const auto cv = cross_validated_predictions({spec(LearnerKind::ols, "a"), spec(LearnerKind::ols, "b")}, d,
                                              make_folds(50, 5, RngStream(1)), RngStream(2));
  EXPECT_EQ(cv.z.col(0), cv.z.col(1));
}

TEST(CrossValidation, FailingLearnerIsDropped) {
  const Dataset d = sim_data(3, 25, 14);
  const FoldAssignment folds = make_folds(25, 5, RngStream(1));
  const auto cv = cross_validated_predictions({spec(LearnerKind::ols, "glm"), spec(LearnerKind::knn, "big", {{"k", 22}})},
                                              d, folds, RngStream(2));
  EXPECT_EQ(cv.labels, std::vector<std::string>{"glm"});
  ASSERT_EQ(cv.dropped.size(), 1u);
  EXPECT_EQ(cv.dropped[0].label, "big");
  EXPECT_EQ(error_id([&] { cross_validated_predictions({spec(LearnerKind::knn, "big", {{"k", 22}})}, d, folds, RngStream(2)); }),
            "AllLearnersFailed");
}

TEST(SuperLearner, SingleLearnerIsThatLearner) {
  const Dataset d = sim_data(2, 80, 15);
  const auto model = super_learn({spec(LearnerKind::ols, "glm")}, d, 10, {}, RngStream(1));
  EXPECT_EQ(model.weights.alpha(0), 1.0);
  const FittedLearner ols = fit(spec(LearnerKind::ols, "glm"), d, RngStream(99));
  EXPECT_EQ(sl_predict(model, d.x()), ols.predict(d.x()));
  const auto rows = cv_risk_table(model);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].cv_risk, rows[1].cv_risk);
}

TEST(SuperLearner, TrainingCountIsMTimesVPlusOne) {
  const Dataset d = sim_data(4, 60, 16);
  std::atomic<std::size_t> counter{0};
  CvOptions options;
  options.fit_counter = &counter;
  super_learn({spec(LearnerKind::ols, "glm"), spec(LearnerKind::tree, "tree"), spec(LearnerKind::knn, "knn")}, d, 10, {},
              RngStream(1), options);
  EXPECT_EQ(counter.load(), 33u);
}

TEST(SuperLearner, DominanceAndSimplex) {
  for (int sim = 1; sim <= 4; ++sim) {
    const auto model = super_learn(mixed_library(), sim_data(sim, 100, 17), 10, {}, RngStream(sim));
    EXPECT_GE(model.weights.alpha.minCoeff(), 0.0);
    EXPECT_NEAR(model.weights.alpha.sum(), 1.0, 1e-9);
    EXPECT_LE(model.sl_cv_risk, model.cv_risks.minCoeff() + 1e-8);
    double weight_sum = 0;
    double prev = -1;
    for (const auto& row : cv_risk_table(model)) {
      EXPECT_GE(row.cv_risk, prev);
      prev = row.cv_risk;
      if (row.weight) weight_sum += *row.weight;
    }
    EXPECT_NEAR(weight_sum, 1.0, 1e-9);
  }
}

TEST(SuperLearner, ParallelIsBitIdenticalToSerial) {
  const Dataset d = sim_data(4, 120, 18);
  CvOptions serial, parallel;
  parallel.threads = 4;
  const auto a = super_learn(mixed_library(), d, 10, {}, RngStream(5), serial);
  const auto b = super_learn(mixed_library(), d, 10, {}, RngStream(5), parallel);
  EXPECT_EQ(a.weights.alpha, b.weights.alpha);
  EXPECT_EQ(a.cv_risks, b.cv_risks);
  const Matrix q = generate(4, 200, RngStream(6)).x();
  EXPECT_EQ(sl_predict(a, q), sl_predict(b, q));
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(SuperLearner, RowPermutationConsistency) {
  const Dataset d = sim_data(3, 40, 19);
  const FoldAssignment folds = make_folds(40, 5, RngStream(1));
  const std::vector<LearnerSpec> lib = {spec(LearnerKind::ols, "glm"), spec(LearnerKind::knn, "knn", {{"k", 3}}),
                                        spec(LearnerKind::gam_spline, "gam"), spec(LearnerKind::loess, "lo")};
  std::vector<Index> perm(40);
  std::iota(perm.begin(), perm.end(), Index{0});
  RandomGenerator(RngStream(2)).shuffle(perm);
  std::vector<std::size_t> permuted_folds(40);
  for (std::size_t k = 0; k < 40; ++k) permuted_folds[k] = folds.fold_of(static_cast<std::size_t>(perm[k]));
  const auto a = cross_validated_predictions(lib, d, folds, RngStream(3));
  const auto b = cross_validated_predictions(lib, d.subset(perm), FoldAssignment(permuted_folds, 5), RngStream(3));
  for (std::size_t k = 0; k < 40; ++k) {
    EXPECT_LE((a.z.row(perm[k]) - b.z.row(static_cast<Index>(k))).cwiseAbs().maxCoeff(), 1e-9);
  }
  const auto wa = solve_simplex_ls(a.z, d.y());
  const auto wb = solve_simplex_ls(b.z, d.subset(perm).y());
  EXPECT_LE((wa.alpha - wb.alpha).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SuperLearner, ConstantResponse) {
  Matrix x = testutil::random_matrix(30, 2, 20);
  const Dataset d(x, Vector::Constant(30, 2.5), {"a", "b"});
  const std::vector<LearnerSpec> lib = {spec(LearnerKind::ols, "glm"), spec(LearnerKind::tree, "tree"),
                                        spec(LearnerKind::knn, "knn"), spec(LearnerKind::gam_spline, "gam")};
  const auto model = super_learn(lib, d, 5, {}, RngStream(1));
  const Vector p = sl_predict(model, testutil::random_matrix(10, 2, 21));
  for (Index i = 0; i < p.size(); ++i) EXPECT_NEAR(p(i), 2.5, 1e-12);
}

TEST(SuperLearner, PredictionsWithinLearnerRange) {
  const auto model = super_learn(mixed_library(), sim_data(1, 100, 22), 10, {}, RngStream(1));
  const Matrix q = generate(1, 300, RngStream(23)).x();
  const Matrix per = library_predictions(model, q);
  const Vector out = sl_predict(model, q);
  for (Index i = 0; i < q.rows(); ++i) {
    EXPECT_GE(out(i), per.row(i).minCoeff() - 1e-12);
    EXPECT_LE(out(i), per.row(i).maxCoeff() + 1e-12);
  }
  EXPECT_EQ(error_id([&] { sl_predict(model, Matrix::Zero(2, 3)); }), "DimensionMismatch");
}

TEST(SuperLearner, BadFoldCount) {
  const Dataset d = sim_data(1, 10, 24);
  EXPECT_EQ(error_id([&] { super_learn({spec(LearnerKind::ols, "glm")}, d, 1, {}, RngStream(1)); }), "BadFoldCount");
  EXPECT_EQ(error_id([&] { super_learn({spec(LearnerKind::ols, "glm")}, d, 11, {}, RngStream(1)); }), "BadFoldCount");
}

TEST(SuperLearner, ModelRoundTrip) {
  const auto model = super_learn(mixed_library(), sim_data(2, 100, 25), 10, {}, RngStream(1));
  const std::string text = to_json(model).dump(2);
  const auto back = superlearner_model_from_json(Json::parse(text));
  const Matrix q = generate(2, 100, RngStream(26)).x();
  EXPECT_EQ(sl_predict(back, q), sl_predict(model, q));
  EXPECT_EQ(to_json(back).dump(2), text);
  EXPECT_EQ(error_id([] { superlearner_model_from_json(Json::parse(R"({"kind":"other"})")); }), "ModelFormat");
}

TEST(SuperLearner, NnlsSolverModeIsFeasible) {
  CvOptions options;
  options.solver = MetaSolver::nnls_normalize;
  const auto model = super_learn(mixed_library(), sim_data(3, 100, 27), 10, {}, RngStream(1), options);
  EXPECT_GE(model.weights.alpha.minCoeff(), 0.0);
  EXPECT_NEAR(model.weights.alpha.sum(), 1.0, 1e-9);
  EXPECT_EQ(superlearner_model_from_json(to_json(model)).solver, MetaSolver::nnls_normalize);
}
