#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "superlearn/csv.hpp"
#include "superlearn/cv.hpp"
#include "superlearn/json_io.hpp"
#include "superlearn/metrics.hpp"
#include "superlearn/parallel.hpp"

namespace superlearn {

// ---------------------------------------------------------------------------
// Data ingestion

inline bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "N/A" || s == "NaN" || s == "nan" || s == "." || s == "?";
}

/// Parses a numeric cell. Row and column are 1-based data coordinates used
/// only for diagnostics.
inline double parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
  std::string_view s = raw;
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (is_missing_token(std::string(s))) {
    throw Error("MissingCell", ErrorCategory::data,
                "missing value at row " + std::to_string(row) + ", column " + std::to_string(col));
  }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw csv_parse_error(row, col, "'" + raw + "' is not a number");
  }
  return value;
}

/// Builds a Dataset from a parsed CSV: `target` is the response, every other
/// column not listed in `drop` is a predictor (header order).
inline Dataset dataset_from_csv(const CsvTable& table, const std::string& target, const std::vector<std::string>& drop = {}) {
  const auto target_it = std::find(table.header.begin(), table.header.end(), target);
  if (target_it == table.header.end()) {
    throw Error("TargetMissing", ErrorCategory::data, "target column '" + target + "' not in header");
  }
  for (const auto& d : drop) {
    if (std::find(table.header.begin(), table.header.end(), d) == table.header.end()) {
      throw Error("ShapeMismatch", ErrorCategory::data, "drop column '" + d + "' not in header");
    }
  }
  const auto target_col = static_cast<std::size_t>(target_it - table.header.begin());
  std::vector<std::size_t> features;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == target_col || std::find(drop.begin(), drop.end(), table.header[c]) != drop.end()) continue;
    features.push_back(c);
    names.push_back(table.header[c]);
  }
  if (features.empty()) throw Error("ShapeMismatch", ErrorCategory::data, "no predictor columns remain");
  if (table.rows.empty()) throw Error("ShapeMismatch", ErrorCategory::data, "no data rows");
  Matrix x(static_cast<Index>(table.rows.size()), static_cast<Index>(features.size()));
  Vector y(static_cast<Index>(table.rows.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    y(static_cast<Index>(r)) = parse_cell(row[target_col], r + 1, target_col + 1);
    for (std::size_t k = 0; k < features.size(); ++k) {
      x(static_cast<Index>(r), static_cast<Index>(k)) = parse_cell(row[features[k]], r + 1, features[k] + 1);
    }
  }
  return Dataset(std::move(x), std::move(y), std::move(names));
}

/// Predictor matrix whose columns are bound by name to `names` (any extra
/// input columns are ignored, a missing one is a data error).
inline Matrix features_by_name(const CsvTable& table, const std::vector<std::string>& names) {
  std::vector<std::size_t> cols;
  for (const auto& name : names) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) {
      throw Error("MissingColumn", ErrorCategory::data, "feature column '" + name + "' not in input");
    }
    cols.push_back(static_cast<std::size_t>(it - table.header.begin()));
  }
  Matrix x(static_cast<Index>(table.rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double v = parse_cell(table.rows[r][cols[k]], r + 1, cols[k] + 1);
      if (!std::isfinite(v)) throw non_finite_error(v, r, cols[k]);
      x(static_cast<Index>(r), static_cast<Index>(k)) = v;
    }
  }
  return x;
}

struct ManifestEntry {
  std::string id;
  std::string csv_path;
  std::string target_column;
  std::vector<std::string> drop_columns;
  std::optional<std::size_t> expected_n;
  std::optional<std::size_t> expected_p;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

inline ManifestEntry manifest_entry_from_json(const Json& j, const std::filesystem::path& base_dir) {
  static const std::set<std::string> known{"id", "csv_path", "target_column", "drop_columns", "expected_n", "expected_p"};
  if (!j.is_object()) throw config_error("manifest entry must be an object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw config_error("unknown manifest key '" + key + "'");
  try {
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    std::filesystem::path path = j.at("csv_path").get<std::string>();
    if (path.is_relative()) path = base_dir / path;
    e.csv_path = path.string();
    e.target_column = j.at("target_column").get<std::string>();
    if (j.contains("drop_columns")) e.drop_columns = j["drop_columns"].get<std::vector<std::string>>();
    if (j.contains("expected_n")) e.expected_n = j["expected_n"].get<std::size_t>();
    if (j.contains("expected_p")) e.expected_p = j["expected_p"].get<std::size_t>();
    return e;
  } catch (const Json::exception& ex) {
    throw config_error(std::string("bad manifest entry: ") + ex.what());
  }
}

/// Reads a manifest: either one JSON document ({"datasets": [...]} or a bare
/// array) or JSON Lines with one entry per line. Relative csv paths resolve
/// against the manifest's directory.
inline DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {}) {
  std::vector<Json> items;
  try {
    const Json doc = Json::parse(text);
    const Json& list = doc.is_object() && doc.contains("datasets") ? doc["datasets"] : doc;
    if (list.is_array()) {
      for (const auto& e : list) items.push_back(e);
    } else {
      items.push_back(list);
    }
  } catch (const Json::parse_error&) {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        items.push_back(Json::parse(line));
      } catch (const Json::parse_error& e) {
        throw config_error(std::string("manifest is neither JSON nor JSON Lines: ") + e.what());
      }
    }
  }
  DatasetManifest manifest;
  std::set<std::string> ids;
  for (const auto& item : items) {
    manifest.entries.push_back(manifest_entry_from_json(item, base_dir));
    if (!ids.insert(manifest.entries.back().id).second) {
      throw config_error("duplicate dataset id '" + manifest.entries.back().id + "'");
    }
  }
  if (manifest.entries.empty()) throw config_error("manifest lists no datasets");
  return manifest;
}

inline DatasetManifest load_manifest(const std::string& path) {
  return parse_manifest(read_text_file(path), std::filesystem::path(path).parent_path());
}

inline Dataset load_dataset(const ManifestEntry& entry) {
  const Dataset data = dataset_from_csv(read_csv(entry.csv_path), entry.target_column, entry.drop_columns);
  if (entry.expected_n && *entry.expected_n != static_cast<std::size_t>(data.n())) {
    throw Error("ShapeMismatch", ErrorCategory::data,
                entry.id + ": expected n=" + std::to_string(*entry.expected_n) + ", file has " + std::to_string(data.n()));
  }
  if (entry.expected_p && *entry.expected_p != static_cast<std::size_t>(data.p())) {
    throw Error("ShapeMismatch", ErrorCategory::data,
                entry.id + ": expected p=" + std::to_string(*entry.expected_p) + ", file has " + std::to_string(data.p()));
  }
  return data;
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchOptions {
  std::size_t inner_folds = 10;
  std::size_t outer_folds = 10;
  std::uint64_t master_seed = 1;
  std::string reference;  // empty: first learner of kind ols
  std::size_t threads = 1;
  MetaSolver solver = MetaSolver::simplex_exact;
  /// Called with every fitted super learner; may run on worker threads.
  std::function<void(const SuperLearnerModel&)> on_model;
};

/// Outer cross-validated predictions for one dataset: one column per
/// surviving learner plus the super learner (last column, label "SL").
struct BenchDatasetResult {
  std::string id;
  std::vector<std::string> labels;
  Matrix predictions;
  FoldAssignment outer_folds;
  std::vector<double> cvmse;
  std::vector<double> relative_mse;
  std::vector<DroppedLearner> failed;
};

inline std::string reference_label(const std::vector<LearnerSpec>& library, const std::string& requested) {
  if (!requested.empty()) {
    for (const auto& s : library)
      if (s.label == requested) return requested;
    throw Error("MissingReference", ErrorCategory::config, "reference learner '" + requested + "' not in library");
  }
  for (const auto& s : library)
    if (s.kind == LearnerKind::ols) return s.label;
  throw Error("MissingReference", ErrorCategory::config, "library has no ols learner to act as the reference");
}

/**
 * Honest cross-validated risk on one dataset. Outer folds are shared by all
 * algorithms. Each base learner is trained on the outer-training part of
 * every fold; the super learner runs its whole procedure (inner V-fold
 * included) on the same outer-training part. Neither ever sees the
 * held-out responses.
 */
inline BenchDatasetResult run_bench_dataset(const std::string& id, const Dataset& data,
                                            const std::vector<LearnerSpec>& library, const BenchOptions& options,
                                            std::size_t dataset_index) {
  validate_library(library);
  const std::string reference = reference_label(library, options.reference);
  const RngStream root = RngStream(options.master_seed).child(StreamTag::bench_dataset, dataset_index);
  const FoldAssignment outer =
      make_folds(static_cast<std::size_t>(data.n()), options.outer_folds, root.child(StreamTag::bench_outer, 0));
  const std::size_t m_count = library.size();
  const std::size_t k_count = outer.folds();
  std::vector<std::vector<Index>> held(k_count), train(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    held[k] = outer.held_out(k);
    train[k] = outer.training(k);
  }

  // Tasks: (learner m, fold k) for m < M, then (SL, fold k).
  std::vector<Vector> cell((m_count + 1) * k_count);
  std::vector<std::optional<std::string>> failure((m_count + 1) * k_count);
  parallel_for((m_count + 1) * k_count, options.threads, [&](std::size_t task) {
    const std::size_t m = task / k_count;
    const std::size_t k = task % k_count;
    const Dataset training = data.subset(train[k]);
    const Matrix x_held = data.x()(held[k], Eigen::all);
    try {
      if (m < m_count) {
        const FittedLearner f =
            fit(library[m], training, root.child(StreamTag::bench_fit, m).child(StreamTag::fold, k));
        cell[task] = f.predict(x_held);
      } else {
        CvOptions cv;
        cv.solver = options.solver;
        const SuperLearnerModel model = super_learn(library, training, options.inner_folds, LossSpec{},
                                                    root.child(StreamTag::bench_outer, k + 1), cv);
        if (options.on_model) options.on_model(model);
        cell[task] = sl_predict(model, x_held);
      }
      if (!cell[task].allFinite()) failure[task] = "non-finite prediction on outer fold " + std::to_string(k + 1);
    } catch (const Error& e) {
      if (e.category() == ErrorCategory::config) throw;
      failure[task] = e.id() + " on outer fold " + std::to_string(k + 1) + ": " + e.what();
    }
  });

  BenchDatasetResult out{id, {}, Matrix(), outer, {}, {}, {}};
  std::vector<std::size_t> kept;
  for (std::size_t m = 0; m <= m_count; ++m) {
    const std::string label = m < m_count ? library[m].label : kSuperLearnerLabel;
    std::optional<std::string> reason;
    for (std::size_t k = 0; k < k_count && !reason; ++k) reason = failure[m * k_count + k];
    if (reason) {
      out.failed.push_back({label, *reason});
    } else {
      kept.push_back(m);
      out.labels.push_back(label);
    }
  }
  out.predictions.resize(data.n(), static_cast<Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const Vector& pred = cell[kept[c] * k_count + k];
      for (std::size_t i = 0; i < held[k].size(); ++i) out.predictions(held[k][i], static_cast<Index>(c)) = pred(static_cast<Index>(i));
    }
  }
  std::map<std::string, double> cvmse;
  for (std::size_t c = 0; c < kept.size(); ++c) {
    out.cvmse.push_back(cv_mse(out.predictions.col(static_cast<Index>(c)), data.y()));
    cvmse[out.labels[c]] = out.cvmse.back();
  }
  const auto rel = relative_mse(cvmse, reference);
  for (const auto& label : out.labels) out.relative_mse.push_back(rel.at(label));
  return out;
}

struct BenchAlgorithmSummary {
  std::string label;
  double geometric_mean = 0.0;
  std::size_t n_datasets = 0;
  std::vector<std::pair<std::string, double>> per_dataset;  // (dataset id, relative MSE)
};

struct BenchResult {
  std::string reference;
  std::vector<BenchDatasetResult> datasets;
  std::vector<BenchAlgorithmSummary> summary;  // ascending geometric mean, ties by label
};

/// Geometric means over the datasets where each algorithm succeeded.
inline std::vector<BenchAlgorithmSummary> summarize_bench(const std::vector<BenchDatasetResult>& datasets) {
  std::vector<std::string> order;
  std::map<std::string, BenchAlgorithmSummary> by_label;
  for (const auto& d : datasets) {
    for (std::size_t c = 0; c < d.labels.size(); ++c) {
      auto [it, inserted] = by_label.try_emplace(d.labels[c]);
      if (inserted) {
        order.push_back(d.labels[c]);
        it->second.label = d.labels[c];
      }
      it->second.per_dataset.emplace_back(d.id, d.relative_mse[c]);
    }
  }
  std::vector<BenchAlgorithmSummary> out;
  for (const auto& label : order) {
    BenchAlgorithmSummary s = by_label[label];
    std::vector<double> values;
    for (const auto& [_, v] : s.per_dataset) values.push_back(v);
    s.geometric_mean = geometric_mean(values);
    s.n_datasets = values.size();
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const BenchAlgorithmSummary& a, const BenchAlgorithmSummary& b) {
    if (a.geometric_mean != b.geometric_mean) return a.geometric_mean < b.geometric_mean;
    return a.label < b.label;
  });
  return out;
}

inline BenchResult run_bench(const std::vector<std::pair<std::string, Dataset>>& datasets,
                             const std::vector<LearnerSpec>& library, const BenchOptions& options) {
  if (datasets.empty()) throw config_error("benchmark needs at least one dataset");
  BenchResult result;
  result.reference = reference_label(library, options.reference);
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    result.datasets.push_back(run_bench_dataset(datasets[d].first, datasets[d].second, library, options, d));
  }
  result.summary = summarize_bench(result.datasets);
  return result;
}

inline BenchResult run_bench(const DatasetManifest& manifest, const std::vector<LearnerSpec>& library,
                             const BenchOptions& options) {
  std::vector<std::pair<std::string, Dataset>> datasets;
  for (const auto& entry : manifest.entries) datasets.emplace_back(entry.id, load_dataset(entry));
  return run_bench(datasets, library, options);
}

}  // namespace superlearn
