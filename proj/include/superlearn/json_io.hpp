#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "superlearn/core.hpp"
#include "superlearn/error.hpp"

namespace superlearn {

using Json = nlohmann::json;

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw Error("ModelFormat", ErrorCategory::data, "expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

/// Row-major nested arrays.
inline Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

inline Matrix matrix_from_json(const Json& j, Index cols) {
  if (!j.is_array()) throw Error("ModelFormat", ErrorCategory::data, "expected a matrix");
  Matrix m(static_cast<Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || static_cast<Index>(j[i].size()) != cols)
      throw Error("ModelFormat", ErrorCategory::data, "ragged matrix row " + std::to_string(i));
    for (Index c = 0; c < cols; ++c) m(static_cast<Index>(i), c) = j[i][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace superlearn
