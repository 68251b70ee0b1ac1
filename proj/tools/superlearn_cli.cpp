// superlearn: fit, predict, cv-risk, sim and bench front end.
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 fit error,
// 1 anything unexpected. Errors print one line: "error[<Id>]: <message>".

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "superlearn/superlearn.hpp"

namespace fs = std::filesystem;
using namespace superlearn;

namespace {

struct ConfigFile {
  Json json = Json::object();
  fs::path dir;  // relative paths in the config resolve against this

  bool has(const std::string& key) const { return json.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) const {
    if (!json.contains(key)) return fallback;
    try {
      return json[key].get<T>();
    } catch (const Json::exception& e) {
      throw config_error("config key '" + key + "': " + e.what());
    }
  }

  std::string path(const std::string& key) const {
    const auto raw = get<std::string>(key, "");
    if (raw.empty()) return raw;
    const fs::path p(raw);
    return p.is_relative() ? (dir / p).string() : raw;
  }
};

ConfigFile load_config(const std::string& path, const std::set<std::string>& allowed) {
  ConfigFile c;
  if (path.empty()) return c;
  try {
    c.json = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw config_error("config '" + path + "' is not valid JSON: " + e.what());
  } catch (const Error& e) {
    throw Error(e.id(), ErrorCategory::config, e.what());
  }
  if (!c.json.is_object()) throw config_error("config must be a JSON object");
  for (const auto& [key, _] : c.json.items()) {
    if (!allowed.count(key)) throw config_error("unknown config key '" + key + "'");
  }
  c.dir = fs::path(path).parent_path();
  return c;
}

// Flag values win over config values, which win over defaults.
template <class T>
T pick(const std::optional<T>& flag, const ConfigFile& config, const std::string& key, T fallback) {
  if (flag) return *flag;
  return config.get<T>(key, fallback);
}

std::string pick_path(const std::optional<std::string>& flag, const ConfigFile& config, const std::string& key) {
  if (flag) return *flag;
  return config.path(key);
}

std::size_t thread_count(const std::optional<std::size_t>& flag, const ConfigFile& config) {
  const std::size_t t = pick(flag, config, "threads", default_thread_count());
  if (t < 1) throw config_error("threads must be at least 1");
  return t;
}

std::vector<LearnerSpec> library_setting(const ConfigFile& config, const std::optional<std::string>& flag,
                                         const std::string& fallback) {
  if (flag) return default_library(*flag);
  if (config.has("library")) return library_from_json(config.json["library"]);
  return default_library(fallback);
}

std::string require(const std::string& value, const std::string& what) {
  if (value.empty()) throw config_error(what + " is required");
  return value;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

struct FitArgs {
  std::string config;
  std::optional<std::string> data, target, model_out, risk_out, library, solver;
  std::optional<std::size_t> folds, threads;
  std::optional<std::uint64_t> seed;
};

int cmd_fit(const FitArgs& a) {
  const ConfigFile c = load_config(a.config, {"data", "target", "drop_columns", "library", "folds", "seed", "loss",
                                              "meta_solver", "threads", "model_out", "risk_table_out"});
  const std::string data_path = require(pick_path(a.data, c, "data"), "training data path (--data)");
  const std::string target = pick(a.target, c, "target", std::string("y"));
  const auto drop = c.get<std::vector<std::string>>("drop_columns", {});
  const auto library = library_setting(c, a.library, "bench");
  const std::size_t folds = pick(a.folds, c, "folds", std::size_t{10});
  const std::uint64_t seed = pick(a.seed, c, "seed", std::uint64_t{1});
  const LossSpec loss = parse_loss(c.get<std::string>("loss", "squared_error"));
  CvOptions options;
  options.threads = thread_count(a.threads, c);
  options.solver = parse_meta_solver(pick(a.solver, c, "meta_solver", std::string("simplex_exact")));

  const Dataset data = dataset_from_csv(read_csv(data_path), target, drop);
  const SuperLearnerModel model = super_learn(library, data, folds, loss, RngStream(seed), options);
  const std::string model_path = pick_path(a.model_out, c, "model_out");
  if (!model_path.empty()) write_text_file(model_path, dump(to_json(model)));
  write_or_print(pick_path(a.risk_out, c, "risk_table_out"), risk_table_csv(model));
  for (const auto& d : model.dropped) std::cerr << "warning[LearnerDropped]: " << d.label << ": " << d.reason << "\n";
  return 0;
}

SuperLearnerModel load_model(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw Error("ModelFormat", ErrorCategory::data, "model '" + path + "' is not valid JSON: " + e.what());
  }
  return superlearner_model_from_json(j);
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& id_column,
                const std::string& out) {
  const SuperLearnerModel model = load_model(model_path);
  const CsvTable table = read_csv(data_path);
  const Matrix x = features_by_name(table, model.feature_names);
  const Vector yhat = sl_predict(model, x);
  std::optional<std::size_t> id_col;
  if (!id_column.empty()) {
    const auto it = std::find(table.header.begin(), table.header.end(), id_column);
    if (it == table.header.end()) throw Error("MissingColumn", ErrorCategory::data, "id column '" + id_column + "' not in input");
    id_col = static_cast<std::size_t>(it - table.header.begin());
  }
  CsvWriter w({id_column.empty() ? "id" : id_column, "prediction"});
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    w.add({id_col ? table.rows[r][*id_col] : std::to_string(r + 1), format_number(yhat(static_cast<Index>(r)))});
  }
  write_or_print(out, w.str());
  return 0;
}

struct SimArgs {
  std::string config;
  std::optional<std::string> out_dir, library, solver;
  std::optional<std::size_t> reps, n_test, folds, threads;
  std::optional<std::uint64_t> seed;
  std::vector<int> sims;
  std::vector<std::size_t> sizes;
  bool svg = false;
};

int cmd_sim(const SimArgs& a) {
  const ConfigFile c = load_config(a.config, {"sims", "n_train", "train_sizes", "n_test", "reps", "library", "folds",
                                              "seed", "threads", "meta_solver", "out_dir", "svg"});
  std::vector<int> sims = a.sims.empty() ? c.get<std::vector<int>>("sims", {1, 2, 3, 4}) : a.sims;
  std::vector<std::size_t> sizes = a.sizes;
  if (sizes.empty()) sizes = c.get<std::vector<std::size_t>>("train_sizes", {});
  if (sizes.empty()) sizes = {c.get<std::size_t>("n_train", 100)};
  SimConfig base;
  base.n_test = pick(a.n_test, c, "n_test", std::size_t{10000});
  base.reps = pick(a.reps, c, "reps", std::size_t{20});
  base.library = library_setting(c, a.library, "sim");
  base.folds = pick(a.folds, c, "folds", std::size_t{10});
  base.master_seed = pick(a.seed, c, "seed", std::uint64_t{1});
  base.threads = thread_count(a.threads, c);
  base.solver = parse_meta_solver(pick(a.solver, c, "meta_solver", std::string("simplex_exact")));
  base.train_sizes = sizes;
  const bool svg = a.svg || c.get<bool>("svg", false);
  const fs::path out_dir = require(pick_path(a.out_dir, c, "out_dir"), "output directory (--out-dir)");

  MetricTable all;
  all.metric = "r_squared";
  for (int sim : sims) {
    SimConfig cfg = base;
    cfg.sim_id = sim;
    const MetricTable t = run_sample_size_study(cfg);
    all.rows.insert(all.rows.end(), t.rows.begin(), t.rows.end());
    all.summary.insert(all.summary.end(), t.summary.begin(), t.summary.end());
  }
  const SimReport report = render_sim_report(all, svg);
  fs::create_directories(out_dir);
  write_text_file((out_dir / "sim_metrics.csv").string(), report.metrics_csv);
  write_text_file((out_dir / "sim_plot.csv").string(), report.plot_csv);
  Json json = report.json;
  json["config"] = Json{{"sims", sims},     {"train_sizes", sizes},       {"n_test", base.n_test},
                        {"reps", base.reps}, {"folds", base.folds},         {"seed", base.master_seed},
                        {"meta_solver", to_string(base.solver)},           {"library", to_json(base.library)}};
  write_text_file((out_dir / "sim_report.json").string(), dump(json));
  if (svg) write_text_file((out_dir / "sim_plot.svg").string(), report.svg);
  std::cout << report.plot_csv;
  return 0;
}

struct BenchArgs {
  std::string config;
  std::optional<std::string> manifest, out_dir, library, reference, solver;
  std::optional<std::size_t> folds, outer_folds, threads;
  std::optional<std::uint64_t> seed;
  bool svg = false;
};

int cmd_bench(const BenchArgs& a) {
  const ConfigFile c = load_config(a.config, {"manifest", "library", "folds", "outer_folds", "seed", "reference",
                                              "threads", "meta_solver", "out_dir", "svg"});
  const std::string manifest_path = require(pick_path(a.manifest, c, "manifest"), "manifest path (--manifest)");
  BenchOptions options;
  options.inner_folds = pick(a.folds, c, "folds", std::size_t{10});
  options.outer_folds = pick(a.outer_folds, c, "outer_folds", std::size_t{10});
  options.master_seed = pick(a.seed, c, "seed", std::uint64_t{1});
  options.reference = pick(a.reference, c, "reference", std::string());
  options.threads = thread_count(a.threads, c);
  options.solver = parse_meta_solver(pick(a.solver, c, "meta_solver", std::string("simplex_exact")));
  const auto library = library_setting(c, a.library, "bench");
  const bool svg = a.svg || c.get<bool>("svg", false);
  const fs::path out_dir = require(pick_path(a.out_dir, c, "out_dir"), "output directory (--out-dir)");

  DatasetManifest manifest;
  try {
    manifest = load_manifest(manifest_path);
  } catch (const Error& e) {
    if (e.id() == "FileNotFound") throw Error(e.id(), ErrorCategory::config, e.what());
    throw;
  }
  const BenchResult result = run_bench(manifest, library, options);
  const BenchReport report = render_bench_report(result, svg);
  fs::create_directories(out_dir);
  write_text_file((out_dir / "bench_report.csv").string(), report.report_csv);
  write_text_file((out_dir / "bench_summary.csv").string(), report.summary_csv);
  write_text_file((out_dir / "bench_plot.csv").string(), report.plot_csv);
  write_text_file((out_dir / "bench_report.json").string(), dump(report.json));
  if (svg) write_text_file((out_dir / "bench_plot.svg").string(), report.svg);
  std::cout << report.summary_csv;
  return 0;
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::data: return 3;
    case ErrorCategory::fit: return 4;
  }
  return 1;
}

std::string one_line(std::string s) {
  for (char& ch : s)
    if (ch == '\n' || ch == '\r') ch = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Super learner regression: fit, predict, simulate, benchmark."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "superlearn 1.0.0");

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit a super learner and write the model file and CV risk table");
  fit->add_option("-c,--config", fit_args.config, "JSON config file");
  fit->add_option("--data", fit_args.data, "training CSV");
  fit->add_option("--target", fit_args.target, "response column (default y)");
  fit->add_option("--model", fit_args.model_out, "model output path");
  fit->add_option("--risk-table", fit_args.risk_out, "risk table CSV path (default stdout)");
  fit->add_option("--library", fit_args.library, "built-in library name: sim or bench");
  fit->add_option("--folds,-V", fit_args.folds, "number of CV folds (default 10)");
  fit->add_option("--seed", fit_args.seed, "master seed (default 1)");
  fit->add_option("--solver", fit_args.solver, "simplex_exact or nnls_normalize");
  fit->add_option("--threads", fit_args.threads, "worker threads (default $SUPERLEARN_THREADS or all cores)");

  std::string model_path, data_path, id_column, out_path;
  auto* predict = app.add_subcommand("predict", "Predict from a saved model; output columns id,prediction");
  predict->add_option("--model", model_path, "model file")->required();
  predict->add_option("--data", data_path, "input CSV (features bound by column name)")->required();
  predict->add_option("--id-column", id_column, "input column to copy as the id (default: 1-based row number)");
  predict->add_option("-o,--out", out_path, "output CSV (default stdout)");

  std::string risk_model, risk_out;
  auto* cv_risk = app.add_subcommand("cv-risk", "Print the CV risk table stored in a model file");
  cv_risk->add_option("--model", risk_model, "model file")->required();
  cv_risk->add_option("-o,--out", risk_out, "output CSV (default stdout)");

  SimArgs sim_args;
  auto* sim = app.add_subcommand("sim", "Run the simulation study");
  sim->add_option("-c,--config", sim_args.config, "JSON config file");
  sim->add_option("--sims", sim_args.sims, "simulation ids (default 1 2 3 4)");
  sim->add_option("--train-sizes", sim_args.sizes, "training sizes (default 100)");
  sim->add_option("--reps", sim_args.reps, "replicates (default 20)");
  sim->add_option("--n-test", sim_args.n_test, "test set size (default 10000)");
  sim->add_option("--library", sim_args.library, "built-in library name: sim or bench");
  sim->add_option("--folds,-V", sim_args.folds, "number of CV folds (default 10)");
  sim->add_option("--seed", sim_args.seed, "master seed (default 1)");
  sim->add_option("--solver", sim_args.solver, "simplex_exact or nnls_normalize");
  sim->add_option("--threads", sim_args.threads, "worker threads");
  sim->add_option("--out-dir", sim_args.out_dir, "output directory");
  sim->add_flag("--svg", sim_args.svg, "also write sim_plot.svg");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Run the multi-dataset benchmark");
  bench->add_option("-c,--config", bench_args.config, "JSON config file");
  bench->add_option("--manifest", bench_args.manifest, "dataset manifest (JSON or JSON Lines)");
  bench->add_option("--library", bench_args.library, "built-in library name: sim or bench");
  bench->add_option("--reference", bench_args.reference, "reference learner label (default: first ols)");
  bench->add_option("--folds,-V", bench_args.folds, "inner CV folds (default 10)");
  bench->add_option("--outer-folds", bench_args.outer_folds, "outer CV folds (default 10)");
  bench->add_option("--seed", bench_args.seed, "master seed (default 1)");
  bench->add_option("--solver", bench_args.solver, "simplex_exact or nnls_normalize");
  bench->add_option("--threads", bench_args.threads, "worker threads");
  bench->add_option("--out-dir", bench_args.out_dir, "output directory");
  bench->add_flag("--svg", bench_args.svg, "also write bench_plot.svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[Usage]: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (*fit) return cmd_fit(fit_args);
    if (*predict) return cmd_predict(model_path, data_path, id_column, out_path);
    if (*cv_risk) {
      write_or_print(risk_out, risk_table_csv(load_model(risk_model)));
      return 0;
    }
    if (*sim) return cmd_sim(sim_args);
    if (*bench) return cmd_bench(bench_args);
  } catch (const Error& e) {
    std::cerr << "error[" << e.id() << "]: " << one_line(e.what()) << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error[Internal]: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 1;
}
