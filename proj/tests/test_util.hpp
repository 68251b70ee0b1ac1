#pragma once

#include "superlearn/superlearn.hpp"

namespace testutil {

using namespace superlearn;

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  RandomGenerator gen(RngStream(seed).child(StreamTag::test, 0));
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = gen.uniform(lo, hi);
  return m;
}

inline Vector random_vector(Index n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return random_matrix(n, 1, seed, lo, hi).col(0);
}

/// y = 1 + x * (1, -2, 0.5, ...) + noise * N(0, 1).
inline Dataset linear_data(Index n, Index p, std::uint64_t seed, double noise = 0.1) {
  Matrix x = random_matrix(n, p, seed, -2.0, 2.0);
  RandomGenerator gen(RngStream(seed).child(StreamTag::test, 1));
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    double v = 1.0;
    for (Index j = 0; j < p; ++j) v += x(i, j) * (j % 2 == 0 ? 1.0 : -2.0) / static_cast<double>(j + 1);
    y(i) = v + noise * gen.normal();
  }
  return Dataset(std::move(x), std::move(y), default_feature_names(static_cast<std::size_t>(p)));
}

inline LearnerSpec spec(LearnerKind kind, std::string label, Hyperparameters params = {}) {
  return LearnerSpec{kind, std::move(params), std::move(label)};
}

template <class F>
std::string error_id(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.id();
  }
  return "";
}

}  // namespace testutil
