#include <gtest/gtest.h>

#include <limits>

#include "test_util.hpp"

using namespace superlearn;
using testutil::error_id;

namespace {

double objective(const Matrix& z, const Vector& y, const Vector& a) { return (z * a - y).squaredNorm(); }

// Exhaustive search over the 3-simplex on a lattice of the given step.
double grid_minimum(const Matrix& z, const Vector& y, int steps) {
  const Matrix g = z.transpose() * z;
  const Vector c = z.transpose() * y;
  const double yy = y.squaredNorm();
  double best = std::numeric_limits<double>::infinity();
  Vector a(3);
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; i + j <= steps; ++j) {
      a << i, j, steps - i - j;
      a /= steps;
      best = std::min(best, a.dot(g * a) - 2.0 * c.dot(a) + yy);
    }
  }
  return best;
}

void expect_feasible(const Vector& a) {
  EXPECT_GE(a.minCoeff(), 0.0);
  EXPECT_LE(std::abs(a.sum() - 1.0), 1e-9);
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST(Simplex, SingleColumnIsOne) {
  const auto w = solve_simplex_ls(testutil::random_matrix(5, 1, 1), testutil::random_vector(5, 2));
  EXPECT_EQ(w.alpha(0), 1.0);
}

TEST(Simplex, ExactVertex) {
  const Vector y = testutil::random_vector(10, 3);
  Matrix z(10, 3);
  z.col(0) = y;
  z.col(1) = testutil::random_vector(10, 4);
  z.col(2) = testutil::random_vector(10, 5);
  const auto w = solve_simplex_ls(z, y);
  EXPECT_NEAR(w.alpha(0), 1.0, 1e-12);
  EXPECT_NEAR(w.solve_report.final_objective, 0.0, 1e-20);
}

TEST(Simplex, MatchesGridOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix z = testutil::random_matrix(6, 3, 1000 + seed, 0, 1);
    const Vector y = testutil::random_vector(6, 2000 + seed, 0, 1);
    const auto w = solve_simplex_ls(z, y);
    expect_feasible(w.alpha);
    const double grid = grid_minimum(z, y, 1000);
    EXPECT_LE(objective(z, y, w.alpha), grid + 1e-12) << seed;
    EXPECT_NEAR(objective(z, y, w.alpha), grid, 1e-5) << seed;
  }
}

TEST(Simplex, FeasibleOptimalAndDominantOnAwkwardInputs) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RandomGenerator gen(RngStream(seed).child(StreamTag::test, 9));
    const Index n = 1 + static_cast<Index>(gen.below(15));
    const Index m = 1 + static_cast<Index>(gen.below(8));
    Matrix z = testutil::random_matrix(n, m, 3000 + seed, -2, 2);
    if (m > 2) z.col(1) = z.col(0);                      // duplicate column
    if (m > 3) z.col(3).setConstant(0.25);               // constant column
    if (m > 4) z.col(4) = 0.5 * (z.col(0) + z.col(2));   // exact combination
    const Vector y = testutil::random_vector(n, 4000 + seed, -2, 2);
    const auto w = solve_simplex_ls(z, y);
    expect_feasible(w.alpha);
    const double obj = objective(z, y, w.alpha);
    for (Index k = 0; k < m; ++k) EXPECT_LE(obj, (z.col(k) - y).squaredNorm() + 1e-8);
    EXPECT_LE(w.solve_report.kkt_residual, 1e-8) << seed;
    EXPECT_NEAR(w.solve_report.final_objective, obj, 1e-10 * std::max(1.0, obj));
  }
}

TEST(Simplex, ScaleEquivariance) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix z = testutil::random_matrix(30, 5, 5000 + seed);
    const Vector y = testutil::random_vector(30, 6000 + seed);
    const double c = 3.7;
    const auto a = solve_simplex_ls(z, y);
    const auto b = solve_simplex_ls(z * c, y * c);
    EXPECT_LE((a.alpha - b.alpha).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(objective(z * c, y * c, b.alpha) / objective(z, y, a.alpha), c * c, 1e-8);
  }
}

TEST(Simplex, RejectsNonFinite) {
  Matrix z = Matrix::Ones(3, 2);
  z(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(error_id([&] { solve_simplex_ls(z, Vector::Ones(3)); }), "NonFinite");
  EXPECT_EQ(error_id([&] { discrete_select(z, Vector::Ones(3)); }), "NonFinite");
}

TEST(Nnls, NormalizedWeightsAreFeasible) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Matrix z = testutil::random_matrix(20, 4, 7000 + seed, 0, 1);
    const Vector y = testutil::random_vector(20, 8000 + seed, 0, 1);
    expect_feasible(solve_nnls_normalize(z, y).alpha);
    // Non-negativity KKT for the raw NNLS solution.
    const Vector b = nnls(z, y);
    const Vector g = z.transpose() * (z * b - y);
    for (Index k = 0; k < 4; ++k) {
      EXPECT_GE(b(k), 0.0);
      if (b(k) > 0) EXPECT_NEAR(g(k), 0.0, 1e-9);
      else EXPECT_GE(g(k), -1e-9);
    }
  }
}

TEST(Nnls, AgreesWithExactSolverWhenSumIsOne) {
  Matrix z = testutil::random_matrix(40, 3, 9);
  const Vector y = z * vec({0.2, 0.5, 0.3});
  EXPECT_LE((solve_nnls_normalize(z, y).alpha - solve_simplex_ls(z, y).alpha).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Discrete, Examples) {
  const Vector y = testutil::random_vector(8, 10);
  Matrix z(8, 2);
  z.col(0) = y;
  z.col(1) = y.array() + 1.0;
  EXPECT_EQ(discrete_select(z, y), 0u);
  z.col(1) = y;
  EXPECT_EQ(discrete_select(z, y), 0u);
}

TEST(Discrete, MatchesColumnScan) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix z = testutil::random_matrix(10, 4, 11000 + seed);
    const Vector y = testutil::random_vector(10, 12000 + seed);
    std::size_t best = 0;
    double best_mse = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < 4; ++k) {
      double s = 0;
      for (Index i = 0; i < 10; ++i) s += (z(i, k) - y(i)) * (z(i, k) - y(i));
      if (s / 10 < best_mse) {
        best_mse = s / 10;
        best = static_cast<std::size_t>(k);
      }
    }
    EXPECT_EQ(discrete_select(z, y), best);
  }
}

TEST(Combine, Examples) {
  SimplexWeights w;
  w.alpha = vec({1, 0});
  const Matrix m = testutil::random_matrix(4, 2, 13);
  EXPECT_EQ(combine(w, m), Vector(m.col(0)));
  Matrix row(1, 2);
  row << 2, 4;
  w.alpha = vec({0.5, 0.5});
  EXPECT_EQ(combine(w, row)(0), 3.0);
  Matrix row3(1, 3);
  row3 << 0, 3, 6;
  w.alpha = vec({1.0 / 3, 1.0 / 3, 1.0 / 3});
  EXPECT_NEAR(combine(w, row3)(0), 3.0, 1e-15);
  EXPECT_EQ(error_id([&] { combine(w, row); }), "DimensionMismatch");
}

TEST(Combine, RowwiseConvexity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix z = testutil::random_matrix(50, 5, 14000 + seed);
    const auto w = solve_simplex_ls(z, testutil::random_vector(50, 15000 + seed));
    const Matrix q = testutil::random_matrix(30, 5, 16000 + seed, -10, 10);
    const Vector out = combine(w, q);
    for (Index i = 0; i < 30; ++i) {
      EXPECT_GE(out(i), q.row(i).minCoeff() - 1e-12);
      EXPECT_LE(out(i), q.row(i).maxCoeff() + 1e-12);
    }
  }
}
