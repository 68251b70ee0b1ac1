#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "superlearn/bench.hpp"
#include "superlearn/csv.hpp"
#include "superlearn/sim.hpp"

namespace superlearn {

inline constexpr int kReportFormatVersion = 1;

inline LearnerSpec learner(LearnerKind kind, std::string label, Hyperparameters params = {}) {
  return LearnerSpec{kind, std::move(params), std::move(label)};
}

/// The simulation library: main-term and interaction regressions, GAMs,
/// trees, two bagging variants, boosting, knn, three loess spans and a
/// small neural net.
inline std::vector<LearnerSpec> default_sim_library() {
  using K = LearnerKind;
  return {
      learner(K::ols, "glm"),
      learner(K::ols_interactions, "glm_intx"),
      learner(K::gam_spline, "gam_df2", {{"df", 2}}),
      learner(K::gam_spline, "gam_df3", {{"df", 3}}),
      learner(K::gam_spline, "gam_df4", {{"df", 4}}),
      learner(K::tree, "tree"),
      learner(K::bagging, "bagging_cp0.01", {{"cp", 0.01}}),
      learner(K::bagging, "bagging_ms5", {{"min_split", 5}, {"cp", 0.01}}),
      learner(K::boosting, "boosting"),
      learner(K::knn, "knn"),
      learner(K::loess, "loess_0.25", {{"span", 0.25}}),
      learner(K::loess, "loess_0.5", {{"span", 0.5}}),
      learner(K::loess, "loess_0.75", {{"span", 0.75}}),
      learner(K::neural_net, "nnet_2", {{"hidden", 2}}),
  };
}

/// The multi-dataset library: adds penalized and stepwise regression and
/// random forests.
inline std::vector<LearnerSpec> default_bench_library() {
  using K = LearnerKind;
  return {
      learner(K::ols, "glm"),
      learner(K::ols_interactions, "glm_intx"),
      learner(K::ridge, "ridge"),
      learner(K::lasso, "lasso"),
      learner(K::stepwise, "stepwise"),
      learner(K::gam_spline, "gam_df3", {{"df", 3}}),
      learner(K::tree, "tree"),
      learner(K::bagging, "bagging_cp0.01", {{"cp", 0.01}}),
      learner(K::random_forest, "rf"),
      learner(K::boosting, "boosting"),
      learner(K::knn, "knn"),
      learner(K::neural_net, "nnet_2", {{"hidden", 2}}),
  };
}

inline std::vector<LearnerSpec> default_library(const std::string& name) {
  if (name == "sim") return default_sim_library();
  if (name == "bench") return default_bench_library();
  throw config_error("unknown built-in library '" + name + "' (use sim or bench)");
}

inline std::vector<LearnerSpec> library_from_json(const Json& j) {
  if (j.is_string()) return default_library(j.get<std::string>());
  if (!j.is_array()) throw config_error("library must be an array of learner entries or a built-in name");
  std::vector<LearnerSpec> out;
  for (const auto& e : j) out.push_back(learner_spec_from_json(e));
  validate_library(out);
  return out;
}

inline Json to_json(const std::vector<LearnerSpec>& library) {
  Json out = Json::array();
  for (const auto& s : library) out.push_back(to_json(s));
  return out;
}

// ---------------------------------------------------------------------------
// Risk table

inline std::string risk_table_csv(const SuperLearnerModel& model) {
  CsvWriter w({"algorithm", "cv_risk", "weight"});
  for (const auto& row : cv_risk_table(model)) {
    w.add({row.label, format_number(row.cv_risk), row.weight ? format_number(*row.weight) : ""});
  }
  return w.str();
}

// ---------------------------------------------------------------------------
// Dot-and-interval chart

struct ChartPoint {
  std::string panel;
  std::string label;
  double center = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> extra;  // optional per-item points (bench datasets)
};

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

/// One panel per distinct `panel` value, algorithms down the y axis, a dot
/// at `center` and a bar from `lo` to `hi`. Deterministic text output.
inline std::string render_dot_interval_svg(const std::vector<ChartPoint>& points, const std::string& x_label,
                                           std::optional<double> reference_line = std::nullopt) {
  std::vector<std::string> panels;
  for (const auto& p : points)
    if (std::find(panels.begin(), panels.end(), p.panel) == panels.end()) panels.push_back(p.panel);
  std::size_t rows = 0;
  for (const auto& panel : panels) {
    rows = std::max<std::size_t>(rows, std::count_if(points.begin(), points.end(), [&](const ChartPoint& p) { return p.panel == panel; }));
  }
  const double label_w = 130, panel_w = 220, row_h = 18, top = 40, bottom = 40;
  const double width = static_cast<double>(panels.size()) * (label_w + panel_w) + 20;
  const double height = top + bottom + static_cast<double>(rows) * row_h;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(width) + "\" height=\"" +
                    svg_num(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t k = 0; k < panels.size(); ++k) {
    std::vector<const ChartPoint*> items;
    double lo = reference_line.value_or(INFINITY), hi = reference_line.value_or(-INFINITY);
    for (const auto& p : points) {
      if (p.panel != panels[k]) continue;
      items.push_back(&p);
      lo = std::min({lo, p.lo, p.center});
      hi = std::max({hi, p.hi, p.center});
      for (double e : p.extra) {
        lo = std::min(lo, e);
        hi = std::max(hi, e);
      }
    }
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    const double x0 = 10 + static_cast<double>(k) * (label_w + panel_w) + label_w;
    auto sx = [&](double v) { return x0 + (v - lo) / (hi - lo) * panel_w; };
    svg += "<text x=\"" + svg_num(x0 + panel_w / 2) + "\" y=\"20\" text-anchor=\"middle\" font-weight=\"bold\">" +
           svg_escape(panels[k]) + "</text>\n";
    svg += "<rect x=\"" + svg_num(x0) + "\" y=\"" + svg_num(top - 8) + "\" width=\"" + svg_num(panel_w) + "\" height=\"" +
           svg_num(static_cast<double>(items.size()) * row_h + 8) + "\" fill=\"none\" stroke=\"#999\"/>\n";
    if (reference_line) {
      svg += "<line x1=\"" + svg_num(sx(*reference_line)) + "\" x2=\"" + svg_num(sx(*reference_line)) + "\" y1=\"" +
             svg_num(top - 8) + "\" y2=\"" + svg_num(top + static_cast<double>(items.size()) * row_h) +
             "\" stroke=\"#c33\" stroke-dasharray=\"3,3\"/>\n";
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
      const ChartPoint& p = *items[i];
      const double y = top + static_cast<double>(i) * row_h + row_h / 2;
      svg += "<text x=\"" + svg_num(x0 - 6) + "\" y=\"" + svg_num(y + 4) + "\" text-anchor=\"end\">" + svg_escape(p.label) +
             "</text>\n";
      svg += "<line x1=\"" + svg_num(sx(p.lo)) + "\" x2=\"" + svg_num(sx(p.hi)) + "\" y1=\"" + svg_num(y) + "\" y2=\"" +
             svg_num(y) + "\" stroke=\"black\"/>\n";
      for (double e : p.extra) {
        svg += "<circle cx=\"" + svg_num(sx(e)) + "\" cy=\"" + svg_num(y) + "\" r=\"2\" fill=\"#888\"/>\n";
      }
      svg += "<circle cx=\"" + svg_num(sx(p.center)) + "\" cy=\"" + svg_num(y) + "\" r=\"3.5\" fill=\"black\"/>\n";
    }
    svg += "<text x=\"" + svg_num(x0 + panel_w / 2) + "\" y=\"" + svg_num(height - 12) + "\" text-anchor=\"middle\">" +
           svg_escape(x_label) + " [" + svg_num(lo + pad) + ", " + svg_num(hi - pad) + "]</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

// ---------------------------------------------------------------------------
// Simulation report

struct SimReport {
  std::string metrics_csv;  // group, sim, n_train, algorithm, replicate, r_squared
  std::string plot_csv;     // sim, n_train, algorithm, mean, q25, q75
  Json json;
  std::string svg;
};

struct SimCell {
  int sim_id;
  std::size_t n_train;
};

inline SimCell parse_sim_group(const std::string& group) {
  int sim = 0;
  std::size_t n = 0;
  if (std::sscanf(group.c_str(), "sim%d/n%zu", &sim, &n) != 2) throw config_error("bad simulation group '" + group + "'");
  return {sim, n};
}

inline SimReport render_sim_report(const MetricTable& table, bool with_svg = false) {
  SimReport r;
  CsvWriter metrics({"sim", "n_train", "algorithm", "replicate", table.metric});
  for (const auto& row : table.rows) {
    const SimCell c = parse_sim_group(row.group);
    metrics.add({std::to_string(c.sim_id), std::to_string(c.n_train), row.label, std::to_string(row.replicate),
                 format_number(row.value)});
  }
  r.metrics_csv = metrics.str();
  CsvWriter plot({"sim", "n_train", "algorithm", "mean", "q25", "q75"});
  Json summary = Json::array();
  std::vector<ChartPoint> points;
  for (const auto& s : table.summary) {
    const SimCell c = parse_sim_group(s.group);
    plot.add({std::to_string(c.sim_id), std::to_string(c.n_train), s.label, format_number(s.stats.mean),
              format_number(s.stats.q25), format_number(s.stats.q75)});
    summary.push_back(Json{{"sim", c.sim_id},
                           {"n_train", c.n_train},
                           {"algorithm", s.label},
                           {"count", s.count},
                           {"mean", s.stats.mean},
                           {"q25", s.stats.q25},
                           {"q75", s.stats.q75}});
    points.push_back({"Sim " + std::to_string(c.sim_id) + ", n=" + std::to_string(c.n_train), s.label, s.stats.mean,
                      s.stats.q25, s.stats.q75, {}});
  }
  r.plot_csv = plot.str();
  r.json = Json{{"format_version", kReportFormatVersion}, {"kind", "sim_report"}, {"metric", table.metric}, {"summary", summary}};
  if (with_svg) r.svg = render_dot_interval_svg(points, "test R^2, mean and IQR", 0.8);
  return r;
}

// ---------------------------------------------------------------------------
// Benchmark report

struct BenchReport {
  std::string report_csv;   // dataset_id, algorithm, cvmse, relative_mse
  std::string summary_csv;  // algorithm, geometric_mean, n_datasets
  std::string plot_csv;     // algorithm, geometric_mean, dataset_id, relative_mse (one row per point)
  Json json;
  std::string svg;
};

inline BenchReport render_bench_report(const BenchResult& result, bool with_svg = false) {
  BenchReport r;
  CsvWriter report({"dataset_id", "algorithm", "cvmse", "relative_mse"});
  Json datasets = Json::array();
  for (const auto& d : result.datasets) {
    Json rows = Json::array();
    for (std::size_t c = 0; c < d.labels.size(); ++c) {
      report.add({d.id, d.labels[c], format_number(d.cvmse[c]), format_number(d.relative_mse[c])});
      rows.push_back(Json{{"algorithm", d.labels[c]}, {"cvmse", d.cvmse[c]}, {"relative_mse", d.relative_mse[c]}});
    }
    Json failed = Json::array();
    for (const auto& f : d.failed) failed.push_back(Json{{"algorithm", f.label}, {"reason", f.reason}});
    datasets.push_back(Json{{"id", d.id}, {"n", d.outer_folds.n()}, {"rows", rows}, {"failed", failed}});
  }
  r.report_csv = report.str();
  CsvWriter summary({"algorithm", "geometric_mean", "n_datasets"});
  CsvWriter plot({"algorithm", "geometric_mean", "dataset_id", "relative_mse"});
  Json ranking = Json::array();
  std::vector<ChartPoint> points;
  for (const auto& s : result.summary) {
    summary.add({s.label, format_number(s.geometric_mean), std::to_string(s.n_datasets)});
    ChartPoint point{"relative MSE", s.label, s.geometric_mean, s.geometric_mean, s.geometric_mean, {}};
    for (const auto& [id, v] : s.per_dataset) {
      plot.add({s.label, format_number(s.geometric_mean), id, format_number(v)});
      point.extra.push_back(v);
    }
    points.push_back(std::move(point));
    ranking.push_back(Json{{"algorithm", s.label}, {"geometric_mean", s.geometric_mean}, {"n_datasets", s.n_datasets}});
  }
  r.summary_csv = summary.str();
  r.plot_csv = plot.str();
  r.json = Json{{"format_version", kReportFormatVersion},
                {"kind", "bench_report"},
                {"reference", result.reference},
                {"datasets", datasets},
                {"summary", ranking}};
  if (with_svg) r.svg = render_dot_interval_svg(points, "relative MSE (+ geometric mean)", 1.0);
  return r;
}

}  // namespace superlearn
