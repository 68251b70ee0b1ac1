#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "superlearn/core.hpp"
#include "superlearn/linalg.hpp"

namespace superlearn {

struct SolveReport {
  std::size_t iterations = 0;
  double final_objective = 0.0;  // ||Z alpha - y||^2
  double kkt_residual = 0.0;     // relative to the gradient scale

  friend bool operator==(const SolveReport&, const SolveReport&) = default;
};

/// Convex combination weights over the library, in library order.
struct SimplexWeights {
  Vector alpha;
  std::vector<std::string> labels;
  SolveReport solve_report;
};

enum class MetaSolver { simplex_exact, nnls_normalize };

inline std::string to_string(MetaSolver s) {
  return s == MetaSolver::simplex_exact ? "simplex_exact" : "nnls_normalize";
}

inline MetaSolver parse_meta_solver(const std::string& name) {
  if (name == "simplex_exact") return MetaSolver::simplex_exact;
  if (name == "nnls_normalize") return MetaSolver::nnls_normalize;
  throw config_error("unknown meta solver '" + name + "'");
}

namespace detail {

inline void require_finite(const Matrix& z, const Vector& y) {
  if (z.rows() != y.size()) {
    throw length_mismatch_error("level-one design has " + std::to_string(z.rows()) + " rows but y has " +
                                std::to_string(y.size()));
  }
  if (z.rows() < 1 || z.cols() < 1) throw length_mismatch_error("level-one design is empty");
  for (Index j = 0; j < z.cols(); ++j)
    for (Index i = 0; i < z.rows(); ++i)
      if (!std::isfinite(z(i, j)))
        throw non_finite_error(z(i, j), static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  for (Index i = 0; i < y.size(); ++i)
    if (!std::isfinite(y(i))) throw non_finite_error(y(i), static_cast<std::size_t>(i), static_cast<std::size_t>(z.cols()));
}

// Minimizes ||Z_F a - y||^2 subject to sum(a) = 1 over the columns in
// `free`, by eliminating the constraint: a_{f0} = 1 - sum of the others.
inline Vector equality_constrained_ls(const Matrix& z, const Vector& y, const std::vector<Index>& free) {
  Vector a = Vector::Zero(z.cols());
  const Index first = free.front();
  if (free.size() == 1) {
    a(first) = 1.0;
    return a;
  }
  const Index k = static_cast<Index>(free.size()) - 1;
  Matrix diff(z.rows(), k);
  for (Index j = 0; j < k; ++j) diff.col(j) = z.col(free[static_cast<std::size_t>(j + 1)]) - z.col(first);
  const Vector rhs = y - z.col(first);
  const Vector t = least_squares(diff, rhs, 1e-12);
  a(first) = 1.0 - t.sum();
  for (Index j = 0; j < k; ++j) a(free[static_cast<std::size_t>(j + 1)]) = t(j);
  return a;
}

// Gradient scale used to make tolerances invariant to rescaling Z and y.
inline double gradient_scale(const Matrix& z, const Vector& y) {
  const double s = (z.transpose() * z).cwiseAbs().maxCoeff() + (z.transpose() * y).cwiseAbs().maxCoeff();
  return s > 0.0 ? s : 1.0;
}

// Max violation of the simplex KKT conditions for gradient g at alpha:
// g_m equal on the support and no smaller off it.
inline double simplex_kkt_residual(const Vector& alpha, const Vector& g) {
  double nu = 0.0;
  int support = 0;
  for (Index m = 0; m < alpha.size(); ++m) {
    if (alpha(m) > 0.0) {
      nu += g(m);
      ++support;
    }
  }
  nu /= std::max(support, 1);
  double residual = 0.0;
  for (Index m = 0; m < alpha.size(); ++m) {
    if (alpha(m) > 0.0) residual = std::max(residual, std::abs(g(m) - nu));
    residual = std::max(residual, nu - g(m));
  }
  return residual;
}

}  // namespace detail

/**
 * Minimizes ||Z alpha - y||^2 over the probability simplex
 * {alpha >= 0, sum alpha = 1}.
 *
 * Primal active-set method started from alpha = (1/M, ..., 1/M) with every
 * column free. Each step solves the equality-constrained problem on the free
 * set; if that solution leaves the simplex, move toward it until the first
 * weight hits zero and release that column. When the free-set solution is
 * feasible, the most negative reduced gradient among the fixed columns
 * enters; none negative means the KKT conditions hold and alpha is optimal.
 * Rank-deficient free sets (duplicate or affinely dependent columns) are
 * handled by the basic least-squares solution.
 */
inline SimplexWeights solve_simplex_ls(const Matrix& z, const Vector& y, std::vector<std::string> labels = {}) {
  detail::require_finite(z, y);
  const Index m_count = z.cols();
  SimplexWeights out;
  out.labels = std::move(labels);
  out.alpha = Vector::Constant(m_count, 1.0 / static_cast<double>(m_count));
  if (m_count == 1) {
    out.alpha(0) = 1.0;
    out.solve_report.final_objective = (z.col(0) - y).squaredNorm();
    return out;
  }

  const double scale = detail::gradient_scale(z, y);
  const double tol = 1e-12 * scale;
  std::vector<bool> is_free(static_cast<std::size_t>(m_count), true);
  // Columns that re-entered and were released without any progress; they
  // are not offered again, which rules out cycling on near-degenerate input.
  std::vector<bool> blocked(static_cast<std::size_t>(m_count), false);
  Index last_entered = -1;
  Vector& alpha = out.alpha;
  std::size_t iter = 0;
  for (; iter < 10000; ++iter) {
    std::vector<Index> free;
    for (Index m = 0; m < m_count; ++m)
      if (is_free[static_cast<std::size_t>(m)]) free.push_back(m);
    const Vector s = detail::equality_constrained_ls(z, y, free);

    bool feasible = true;
    for (Index m : free) feasible = feasible && s(m) > 0.0;
    if (feasible) {
      alpha = s;
      const Vector g = z.transpose() * (z * alpha - y);
      double nu = 0.0;
      for (Index m : free) nu += g(m);
      nu /= static_cast<double>(free.size());
      Index enter = -1;
      double most_negative = -tol;
      for (Index m = 0; m < m_count; ++m) {
        if (is_free[static_cast<std::size_t>(m)] || blocked[static_cast<std::size_t>(m)]) continue;
        if (g(m) - nu < most_negative) {
          most_negative = g(m) - nu;
          enter = m;
        }
      }
      if (enter < 0) break;
      is_free[static_cast<std::size_t>(enter)] = true;
      last_entered = enter;
      continue;
    }

    // Step from alpha toward s, stopping where the first free weight reaches zero.
    double step = 1.0;
    for (Index m : free) {
      if (s(m) <= 0.0) step = std::min(step, alpha(m) / (alpha(m) - s(m)));
    }
    if (step <= 0.0 && last_entered >= 0) blocked[static_cast<std::size_t>(last_entered)] = true;
    last_entered = -1;
    alpha += step * (s - alpha);
    bool released = false;
    for (Index m : free) {
      if (alpha(m) <= 0.0 || (s(m) <= 0.0 && alpha(m) <= 1e-15)) {
        alpha(m) = 0.0;
        is_free[static_cast<std::size_t>(m)] = false;
        released = true;
      }
    }
    if (!released) {
      // Numerical corner: release the weight closest to zero.
      Index smallest = free.front();
      for (Index m : free)
        if (alpha(m) < alpha(smallest)) smallest = m;
      alpha(smallest) = 0.0;
      is_free[static_cast<std::size_t>(smallest)] = false;
    }
    alpha /= alpha.sum();
  }
  for (Index m = 0; m < m_count; ++m) alpha(m) = std::max(alpha(m), 0.0);
  alpha /= alpha.sum();

  const Vector g = 2.0 * (z.transpose() * (z * alpha - y));
  out.solve_report.iterations = iter + 1;
  out.solve_report.final_objective = (z * alpha - y).squaredNorm();
  out.solve_report.kkt_residual = detail::simplex_kkt_residual(alpha, g) / (2.0 * scale);
  return out;
}

/// Lawson-Hanson non-negative least squares: min ||Z b - y||^2, b >= 0.
inline Vector nnls(const Matrix& z, const Vector& y, std::size_t* iterations = nullptr) {
  const Index m_count = z.cols();
  Vector b = Vector::Zero(m_count);
  std::vector<bool> passive(static_cast<std::size_t>(m_count), false);
  const double tol = 1e-12 * detail::gradient_scale(z, y);
  std::size_t iter = 0;
  for (; iter < 10000; ++iter) {
    const Vector w = z.transpose() * (y - z * b);
    Index enter = -1;
    double best = tol;
    for (Index m = 0; m < m_count; ++m) {
      if (!passive[static_cast<std::size_t>(m)] && w(m) > best) {
        best = w(m);
        enter = m;
      }
    }
    if (enter < 0) break;
    passive[static_cast<std::size_t>(enter)] = true;
    for (std::size_t inner = 0; inner < 10000; ++inner) {
      std::vector<Index> cols;
      for (Index m = 0; m < m_count; ++m)
        if (passive[static_cast<std::size_t>(m)]) cols.push_back(m);
      const Vector sp = least_squares(z(Eigen::all, cols), y, 1e-12);
      Vector s = Vector::Zero(m_count);
      for (std::size_t k = 0; k < cols.size(); ++k) s(cols[k]) = sp(static_cast<Index>(k));
      bool positive = true;
      for (Index m : cols) positive = positive && s(m) > 0.0;
      if (positive) {
        b = s;
        break;
      }
      double step = 1.0;
      for (Index m : cols)
        if (s(m) <= 0.0) step = std::min(step, b(m) / (b(m) - s(m)));
      b += step * (s - b);
      for (Index m : cols) {
        if (b(m) <= 1e-15 * std::max(1.0, b.cwiseAbs().maxCoeff())) {
          b(m) = 0.0;
          passive[static_cast<std::size_t>(m)] = false;
        }
      }
    }
  }
  if (iterations) *iterations = iter + 1;
  return b;
}

/// Non-negative least squares followed by renormalization to sum one
/// (uniform weights if every coefficient is zero).
inline SimplexWeights solve_nnls_normalize(const Matrix& z, const Vector& y, std::vector<std::string> labels = {}) {
  detail::require_finite(z, y);
  SimplexWeights out;
  out.labels = std::move(labels);
  std::size_t iterations = 0;
  Vector b = nnls(z, y, &iterations);
  const double total = b.sum();
  out.alpha = total > 0.0 ? Vector(b / total) : Vector::Constant(z.cols(), 1.0 / static_cast<double>(z.cols()));
  const Vector g = 2.0 * (z.transpose() * (z * out.alpha - y));
  out.solve_report.iterations = iterations;
  out.solve_report.final_objective = (z * out.alpha - y).squaredNorm();
  out.solve_report.kkt_residual =
      detail::simplex_kkt_residual(out.alpha, g) / (2.0 * detail::gradient_scale(z, y));
  return out;
}

inline SimplexWeights solve_weights(MetaSolver solver, const Matrix& z, const Vector& y,
                                    std::vector<std::string> labels = {}) {
  return solver == MetaSolver::simplex_exact ? solve_simplex_ls(z, y, std::move(labels))
                                             : solve_nnls_normalize(z, y, std::move(labels));
}

/// Column with the smallest mean squared error against y; ties go to the
/// lowest index.
inline std::size_t discrete_select(const Matrix& z, const Vector& y) {
  detail::require_finite(z, y);
  std::size_t best = 0;
  double best_mse = std::numeric_limits<double>::infinity();
  for (Index m = 0; m < z.cols(); ++m) {
    const double mse = (z.col(m) - y).squaredNorm() / static_cast<double>(y.size());
    if (mse < best_mse) {
      best_mse = mse;
      best = static_cast<std::size_t>(m);
    }
  }
  return best;
}

/// Row-wise weighted average Yhat * alpha.
inline Vector combine(const SimplexWeights& weights, const Matrix& yhat) {
  if (yhat.cols() != weights.alpha.size()) {
    throw dimension_mismatch_error(static_cast<std::size_t>(weights.alpha.size()),
                                   static_cast<std::size_t>(yhat.cols()));
  }
  Vector out = Vector::Zero(yhat.rows());
  for (Index m = 0; m < yhat.cols(); ++m) out += weights.alpha(m) * yhat.col(m);
  return out;
}

}  // namespace superlearn
