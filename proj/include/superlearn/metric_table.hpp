#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "superlearn/metrics.hpp"

namespace superlearn {

/// One metric value: which study cell it belongs to (`group`, e.g.
/// "sim2/n100" or a dataset id), which algorithm, which replicate.
struct MetricRow {
  std::string group;
  std::string label;
  std::size_t replicate = 0;
  double value = 0.0;
};

struct MetricSummary {
  std::string group;
  std::string label;
  std::size_t count = 0;
  Summary stats;
};

struct MetricTable {
  std::string metric;
  std::vector<MetricRow> rows;
  std::vector<MetricSummary> summary;

  /// Summary entry for (group, label), if present.
  const MetricSummary* find(const std::string& group, const std::string& label) const {
    for (const auto& s : summary)
      if (s.group == group && s.label == label) return &s;
    return nullptr;
  }
};

/// Fills `table.summary` with mean and quartiles per (group, label), in order
/// of first appearance among the rows.
inline void summarize_table(MetricTable& table) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<double>> values;
  for (const auto& row : table.rows) {
    auto key = std::make_pair(row.group, row.label);
    auto [it, inserted] = values.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(row.value);
  }
  table.summary.clear();
  for (const auto& key : order) {
    const auto& v = values[key];
    table.summary.push_back({key.first, key.second, v.size(), summarize(v)});
  }
}

}  // namespace superlearn
