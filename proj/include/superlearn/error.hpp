#pragma once

#include <stdexcept>
#include <string>

namespace superlearn {

// Broad failure class. The CLI maps these onto exit codes 2/3/4.
enum class ErrorCategory { config, data, fit };

/// Base exception. `id()` is a stable identifier (e.g. "BadFoldCount") that
/// prefixes every diagnostic and is safe to match on in scripts.
class Error : public std::runtime_error {
 public:
  Error(std::string id, ErrorCategory category, const std::string& what)
      : std::runtime_error(what), id_(std::move(id)), category_(category) {}

  const std::string& id() const noexcept { return id_; }
  ErrorCategory category() const noexcept { return category_; }

 private:
  std::string id_;
  ErrorCategory category_;
};

inline Error non_finite_error(double value, std::size_t row, std::size_t col) {
  return Error("NonFinite", ErrorCategory::data,
               "non-finite value " + std::to_string(value) + " at row " + std::to_string(row) +
                   ", column " + std::to_string(col));
}

inline Error length_mismatch_error(const std::string& what) {
  return Error("LengthMismatch", ErrorCategory::data, what);
}

inline Error dimension_mismatch_error(std::size_t expected, std::size_t actual) {
  return Error("DimensionMismatch", ErrorCategory::data,
               "expected " + std::to_string(expected) + " columns, got " + std::to_string(actual));
}

inline Error bad_fold_count_error(std::size_t n, std::size_t folds) {
  return Error("BadFoldCount", ErrorCategory::config,
               "fold count " + std::to_string(folds) + " must satisfy 2 <= V <= n (n=" +
                   std::to_string(n) + ")");
}

inline Error fit_failure_error(const std::string& kind, const std::string& reason) {
  return Error("FitFailure", ErrorCategory::fit, kind + ": " + reason);
}

inline Error config_error(const std::string& msg) {
  return Error("ConfigError", ErrorCategory::config, msg);
}

}  // namespace superlearn
