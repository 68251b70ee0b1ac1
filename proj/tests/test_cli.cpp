#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "test_util.hpp"

using namespace superlearn;
using testutil::spec;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "superlearn_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliResult run(const std::string& args, const std::string& env = "") {
  const fs::path out = work_dir() / "stdout.txt";
  const fs::path err = work_dir() / "stderr.txt";
  const std::string cmd = env + " " + std::string(SUPERLEARN_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text_file(out.string()), read_text_file(err.string())};
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

// Training file with an id column and two features.
const Dataset& training() {
  static const Dataset d = [] {
    Matrix x = testutil::random_matrix(60, 2, 1, -2, 2);
    RandomGenerator g(RngStream(2));
    Vector y(60);
    for (Index i = 0; i < 60; ++i) y(i) = 1 + x(i, 0) - 2 * x(i, 1) + 0.3 * g.normal();
    CsvWriter w({"id", "x1", "x2", "y"});
    for (Index i = 0; i < 60; ++i) {
      w.add({"r" + std::to_string(i), format_number(x(i, 0)), format_number(x(i, 1)), format_number(y(i))});
    }
    w.save(path("train.csv"));
    CsvWriter swapped({"x2", "id", "x1"});
    for (Index i = 0; i < 60; ++i) swapped.add({format_number(x(i, 1)), "r" + std::to_string(i), format_number(x(i, 0))});
    swapped.save(path("swapped.csv"));
    return Dataset(x, y, {"x1", "x2"});
  }();
  return d;
}

void write_config(const std::string& name, const Json& j) { write_text_file(path(name), j.dump()); }

Json fit_config(Json library) {
  training();
  return Json{{"data", path("train.csv")}, {"target", "y"}, {"drop_columns", {"id"}}, {"folds", 5},
              {"seed", 11},                {"library", std::move(library)}};
}

std::vector<double> prediction_column(const std::string& csv) {
  std::vector<double> out;
  for (const auto& row : parse_csv(csv).rows) out.push_back(std::stod(row[1]));
  return out;
}

}  // namespace

TEST(Cli, FitThenPredictReproducesOls) {
  write_config("ols.json", fit_config(Json::parse(R"([{"kind":"ols","label":"glm"}])")));
  const CliResult f = run("fit -c " + path("ols.json") + " --model " + path("ols_model.json"));
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_EQ(parse_csv(f.out).rows.size(), 2u);
  const CliResult p = run("predict --model " + path("ols_model.json") + " --data " + path("train.csv") + " --id-column id");
  ASSERT_EQ(p.code, 0) << p.err;
  const CsvTable table = parse_csv(p.out);
  EXPECT_EQ(table.header, (std::vector<std::string>{"id", "prediction"}));
  EXPECT_EQ(table.rows[3][0], "r3");
  const Vector expected = fit(spec(LearnerKind::ols, "glm"), training(), RngStream(0)).predict(training().x());
  const auto got = prediction_column(p.out);
  ASSERT_EQ(got.size(), 60u);
  for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(got[i], expected(static_cast<Index>(i)));
}

TEST(Cli, PredictMatchesInProcessAndBindsByName) {
  write_config("mix.json", fit_config(Json::parse(
                               R"([{"kind":"ols","label":"glm"},{"kind":"knn","label":"knn","params":{"k":5}},
                                   {"kind":"bagging","label":"bag","params":{"n_trees":10}}])")));
  ASSERT_EQ(run("fit -c " + path("mix.json") + " --model " + path("mix_model.json")).code, 0);
  const CliResult p = run("predict --model " + path("mix_model.json") + " --data " + path("train.csv"));
  ASSERT_EQ(p.code, 0) << p.err;
  const CliResult swapped = run("predict --model " + path("mix_model.json") + " --data " + path("swapped.csv"));
  ASSERT_EQ(swapped.code, 0) << swapped.err;
  EXPECT_EQ(p.out, swapped.out);
  EXPECT_EQ(parse_csv(p.out).rows[0][0], "1");
  const auto model = superlearner_model_from_json(Json::parse(read_text_file(path("mix_model.json"))));
  const Vector expected = sl_predict(model, training().x());
  const auto got = prediction_column(p.out);
  for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(got[i], expected(static_cast<Index>(i)));
}

TEST(Cli, ModelFilesAreByteIdenticalAcrossRunsAndThreads) {
  write_config("det.json", fit_config(Json::parse(
                               R"([{"kind":"ols","label":"glm"},{"kind":"random_forest","label":"rf","params":{"n_trees":20}},
                                   {"kind":"neural_net","label":"nn","params":{"max_iter":100}}])")));
  ASSERT_EQ(run("fit -c " + path("det.json") + " --model " + path("det1.json") + " --threads 1").code, 0);
  ASSERT_EQ(run("fit -c " + path("det.json") + " --model " + path("det2.json"), "SUPERLEARN_THREADS=3").code, 0);
  const std::string a = read_text_file(path("det1.json"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, read_text_file(path("det2.json")));
  ASSERT_EQ(run("fit -c " + path("det.json") + " --model " + path("det3.json") + " --seed 12").code, 0);
  EXPECT_NE(a, read_text_file(path("det3.json")));
}

TEST(Cli, ExitCodesAndDiagnostics) {
  write_config("v1.json", fit_config(Json::parse(R"([{"kind":"ols","label":"glm"}])")));
  CliResult r = run("fit -c " + path("v1.json") + " -V 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error[BadFoldCount]: ", 0), 0u) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

  Json bad = fit_config("sim");
  bad["colour"] = "red";
  write_config("bad.json", bad);
  r = run("fit -c " + path("bad.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error[ConfigError]", 0), 0u) << r.err;

  r = run("fit --data " + path("missing.csv"));
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.err.rfind("error[FileNotFound]", 0), 0u) << r.err;

  write_config("fail.json", fit_config(Json::parse(R"([{"kind":"knn","label":"k","params":{"k":500}}])")));
  r = run("fit -c " + path("fail.json"));
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(r.err.rfind("error[AllLearnersFailed]", 0), 0u) << r.err;

  write_text_file(path("nofeature.csv"), "id,x1\n1,0.5\n");
  ASSERT_EQ(run("fit -c " + path("v1.json") + " --model " + path("v1_model.json")).code, 0);
  r = run("predict --model " + path("v1_model.json") + " --data " + path("nofeature.csv"));
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.err.rfind("error[MissingColumn]", 0), 0u) << r.err;

  r = run("frobnicate");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error[Usage]", 0), 0u) << r.err;
}

TEST(Cli, CvRiskReadsModel) {
  write_config("risk.json", fit_config(Json::parse(R"([{"kind":"ols","label":"glm"},{"kind":"knn","label":"knn"}])")));
  const CliResult f = run("fit -c " + path("risk.json") + " --model " + path("risk_model.json"));
  ASSERT_EQ(f.code, 0);
  const CliResult r = run("cv-risk --model " + path("risk_model.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, f.out);
}

TEST(Cli, SimTwoRowTableAndDeterminism) {
  const std::string args = "sim --sims 2 --reps 1 --n-test 500 --out-dir ";
  write_config("sim.json", Json{{"library", Json::parse(R"([{"kind":"ols","label":"glm"}])")}});
  const CliResult a = run(args + path("sim_a") + " -c " + path("sim.json") + " --svg");
  ASSERT_EQ(a.code, 0) << a.err;
  const CsvTable plot = parse_csv(read_text_file(path("sim_a/sim_plot.csv")));
  ASSERT_EQ(plot.rows.size(), 2u);
  EXPECT_EQ(plot.rows[0][3], plot.rows[1][3]);
  EXPECT_TRUE(fs::exists(path("sim_a/sim_plot.svg")));
  const CliResult b = run(args + path("sim_b") + " -c " + path("sim.json") + " --svg --threads 2");
  ASSERT_EQ(b.code, 0);
  for (const char* f : {"sim_metrics.csv", "sim_plot.csv", "sim_report.json", "sim_plot.svg"}) {
    EXPECT_EQ(read_text_file(path(std::string("sim_a/") + f)), read_text_file(path(std::string("sim_b/") + f))) << f;
  }
}

TEST(Cli, BenchOnSyntheticDataset) {
  training();
  write_text_file(path("manifest.jsonl"),
                  R"({"id":"train","csv_path":"train.csv","target_column":"y","drop_columns":["id"],"expected_n":60})"
                  "\n");
  write_config("bench.json", Json{{"manifest", path("manifest.jsonl")},
                                  {"library", Json::parse(R"([{"kind":"ols","label":"glm"},{"kind":"knn","label":"knn"}])")},
                                  {"folds", 3},
                                  {"outer_folds", 3}});
  const CliResult a = run("bench -c " + path("bench.json") + " --out-dir " + path("bench_a"));
  ASSERT_EQ(a.code, 0) << a.err;
  bool saw_glm = false;
  for (const auto& row : parse_csv(read_text_file(path("bench_a/bench_summary.csv"))).rows) {
    if (row[0] == "glm") {
      saw_glm = true;
      EXPECT_EQ(row[1], "1");
    }
  }
  EXPECT_TRUE(saw_glm);
  const CliResult b = run("bench -c " + path("bench.json") + " --out-dir " + path("bench_b"));
  ASSERT_EQ(b.code, 0);
  for (const char* f : {"bench_report.csv", "bench_summary.csv", "bench_plot.csv", "bench_report.json"}) {
    EXPECT_EQ(read_text_file(path(std::string("bench_a/") + f)), read_text_file(path(std::string("bench_b/") + f))) << f;
  }
  const CliResult missing = run("bench --manifest " + path("nope.json") + " --out-dir " + path("bench_c"));
  EXPECT_EQ(missing.code, 2);
}

TEST(Cli, ShippedConfigsAreValid) {
  const fs::path dir = SUPERLEARN_CONFIG_DIR;
  for (const char* name : {"fit.json", "sim.json", "sim_sample_size.json", "bench.json", "manifest.json"}) {
    EXPECT_NO_THROW(Json::parse(read_text_file((dir / name).string()))) << name;
  }
  EXPECT_EQ(load_manifest((dir / "manifest.json").string()).entries.size(), 3u);
  for (const auto& e : load_manifest((dir / "manifest.json").string()).entries) EXPECT_NO_THROW(load_dataset(e)) << e.id;
  // A fast fit using the shipped config with a smaller library.
  const CliResult r = run("fit -c " + (dir / "fit.json").string() + " --library sim --model " + path("shipped.json") +
                    " --risk-table " + path("shipped_risk.csv"));
  EXPECT_EQ(r.code, 0) << r.err;
}
