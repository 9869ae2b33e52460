#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "eigenlocus/experiment.hpp"
#include "eigenlocus/io.hpp"
#include "eigenlocus/level_sets.hpp"

using namespace eigenlocus;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "eigenlocus_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  int code = -1;
  std::string out, err;
};

Outcome cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + EIGENLOCUS_CLI_PATH + "\" " + args + " > \"" +
                          out.string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

json small_config(const fs::path& out) {
  json j = json::parse(R"({
    "name": "small",
    "class1": {"mean": [1, 0], "covariance": [[1, 0.2], [0.2, 0.5]]},
    "class2": {"mean": [-1, 0], "covariance": [[0.6, 0], [0, 1]]},
    "kernel": {"family": "poly2"},
    "C": 50,
    "n_train": 25,
    "n_test": 1000,
    "seeds": [1, 2, 3],
    "grid": {"resolution": 32, "padding_sd": 2}
  })");
  j["output_dir"] = out.string();
  return j;
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

void write_two_point_csv(const fs::path& p) {
  std::ofstream(p) << "x1,x2,label\n1,0,1\n-1,0,-1\n";
}

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("config parsing and schema errors") {
  const auto dir = scratch_dir("config");
  const auto cfg = parse_config(small_config(dir / "out"));
  CHECK(cfg.name == "small");
  CHECK(cfg.kernel.family == KernelFamily::poly2);
  CHECK(cfg.C == 50.0);
  CHECK(cfg.n_train == 25);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(cfg.grid_resolution == 32);

  auto j = small_config(dir);
  j["C"] = "inf";
  CHECK(std::isinf(parse_config(j).C));

  j = small_config(dir);
  j["class1"].erase("covariance");
  try {
    parse_config(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("class1.covariance") != std::string::npos);
  }

  j = small_config(dir);
  j["kernal"] = 1;
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("kernal"), ConfigError);
  j = small_config(dir);
  j["class2"]["covariance"] = json::parse("[[1, 2], [2, 1]]");
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("class2.covariance"), ConfigError);
  j = small_config(dir);
  j["n_test"] = 10;
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("n_test"), ConfigError);
  j = small_config(dir);
  j.erase("class1");
  j.erase("class2");
  j["dataset"] = "missing.csv";
  CHECK_THROWS_WITH_AS(parse_config(j, dir), doctest::Contains("dataset"), ConfigError);
}

TEST_CASE("bundled configs all parse") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(EIGENLOCUS_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const auto cfg = load_config(entry.path());
    CHECK(cfg.name == entry.path().stem().string());
    CHECK(cfg.seeds.size() == 10);
    CHECK(cfg.n_train == 200);
    CHECK(cfg.n_test == 10000);
    ++count;
  }
  CHECK(count == 12);
}

TEST_CASE("summary statistics") {
  const auto row = summarize("x", {4, 1, 3, 2, std::nan("")});
  CHECK(row.count == 4);
  CHECK(row.median == 2.5);
  CHECK(row.q1 == 1.75);
  CHECK(row.q3 == 3.25);
  CHECK(row.iqr() == 1.5);
  CHECK(std::isnan(summarize("y", {}).median));
}

TEST_CASE("experiment artifacts are complete and byte-stable") {
  const auto dir = scratch_dir("run");
  const auto cfg = parse_config(small_config(dir / "out"));
  const auto res = run_experiment(cfg);
  REQUIRE(res.runs.size() == 3);
  for (const auto& r : res.runs) {
    CHECK(r.status == RunStatus::ok);
    CHECK(r.error_rate >= 0.0);
    CHECK(r.error_rate <= 1.0);
    CHECK(r.bayes_rate <= r.error_rate + 0.1);
  }
  CHECK(res.svgs.size() == 3);
  const auto rows = read_rows(res.runs_csv);
  REQUIRE(rows.size() == 4);
  const auto& header = rows[0];
  for (const char* col : {"seed", "status", "error_rate", "bayes_rate", "extreme_fraction",
                          "dual_equilibrium", "primal_equilibrium", "eigenenergy_identity",
                          "class1_energy", "class2_energy", "cosine_balance_1", "cosine_balance_2",
                          "eigen_relation", "side_norm_gap", "delta_y", "lambda1"})
    CHECK(std::find(header.begin(), header.end(), col) != header.end());
  for (std::size_t r = 1; r < rows.size(); ++r) CHECK(rows[r].size() == header.size());

  const auto summary = read_rows(res.summary_csv);
  REQUIRE(summary.size() > 1);
  CHECK(summary[0] == std::vector<std::string>{"metric", "median", "q1", "q3", "iqr", "count"});

  const std::string runs1 = slurp(res.runs_csv), summary1 = slurp(res.summary_csv);
  const std::string svg1 = slurp(res.svgs.front());
  const auto again = run_experiment(cfg);
  CHECK(slurp(again.runs_csv) == runs1);
  CHECK(slurp(again.summary_csv) == summary1);
  CHECK(slurp(again.svgs.front()) == svg1);
}

TEST_CASE("SVG polylines are the traced level sets, vertex for vertex") {
  const auto dir = scratch_dir("svg");
  const auto cfg = parse_config(small_config(dir / "out"));
  std::optional<ScatterPlot> plot;
  run_seed(cfg, 2, &plot);
  REQUIRE(plot.has_value());
  const std::string svg = render_svg(*plot);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("href") == std::string::npos);  // self-contained

  std::vector<std::string> expected;
  for (const auto& tr : plot->traces)
    for (const auto& line : tr.polylines) {
      std::string pts;
      for (std::size_t k = 0; k < line.size(); ++k) {
        if (k) pts += ' ';
        pts += format_double(line[k].x) + ',' + format_double(line[k].y);
      }
      expected.push_back(pts);
    }
  std::vector<std::string> found;
  const std::regex re("<polyline class=\"level\"[^>]* points=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    found.push_back((*it)[1]);
  REQUIRE_FALSE(expected.empty());
  CHECK(found == expected);
  // and the numbers parse back to the traced doubles exactly
  const auto& first = plot->traces[1].polylines.front().front();
  CHECK(std::stod(format_double(first.x)) == first.x);
  // figure colours
  CHECK(svg.find("#d62728") != std::string::npos);
  CHECK(svg.find("#1f4fd6") != std::string::npos);
}

TEST_CASE("dataset-backed experiment") {
  const auto dir = scratch_dir("dataset");
  std::ofstream(dir / "data.csv") << "x1,x2,label\n0,0,1\n0.2,0.1,1\n2,2,-1\n2.1,1.8,-1\n";
  json j = {{"name", "csvrun"},  {"dataset", "data.csv"}, {"kernel", {{"family", "linear"}}},
            {"C", "inf"},        {"seeds", {1}},          {"output_dir", (dir / "out").string()}};
  const auto cfg = parse_config(j, dir);
  const auto res = run_experiment(cfg);
  REQUIRE(res.runs.size() == 1);
  CHECK(res.runs[0].status == RunStatus::ok);
  CHECK(res.runs[0].error_rate == 0.0);
  CHECK(std::isnan(res.runs[0].bayes_rate));
}

TEST_CASE("cli: train then classify reproduces the training labels") {
  const auto dir = scratch_dir("train");
  write_two_point_csv(dir / "train.csv");
  const auto model = dir / "model.json";
  auto o = cli("train --data \"" + (dir / "train.csv").string() + "\" --out \"" + model.string() +
                   "\" --kernel linear --C inf",
               dir);
  REQUIRE(o.code == 0);
  REQUIRE(fs::exists(model));
  o = cli("classify --model \"" + model.string() + "\" --data \"" + (dir / "train.csv").string() +
              "\" --out \"" + (dir / "pred.csv").string() + "\"",
          dir);
  REQUIRE(o.code == 0);
  const auto rows = read_rows(dir / "pred.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"x1", "x2", "predicted_label", "discriminant_value"});
  CHECK(rows[1][2] == "1");
  CHECK(rows[2][2] == "-1");
  CHECK(std::stod(rows[1][3]) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cli: predictions through a model file match the in-memory model") {
  const auto dir = scratch_dir("roundtrip");
  const auto data = sample_dataset(GaussianClassSpec{Eigen::Vector2d(1, 0), Eigen::Matrix2d::Identity()},
                                   GaussianClassSpec{Eigen::Vector2d(-1, 0), Eigen::Matrix2d::Identity()},
                                   30, 30, 5);
  write_csv(dir / "train.csv", data.samples);
  const auto model = dir / "model.json";
  REQUIRE(cli("train --data \"" + (dir / "train.csv").string() + "\" --out \"" + model.string() +
                  "\" --kernel gaussian --gamma 0.05 --C 50",
              dir)
              .code == 0);
  const auto o = cli("classify --model \"" + model.string() + "\" --data \"" +
                         (dir / "train.csv").string() + "\"",
                     dir);
  REQUIRE(o.code == 0);
  const auto m = train(data.samples, KernelSpec::gaussian(0.05), 50.0);
  std::stringstream ss(o.out);
  std::string line;
  std::getline(ss, line);
  Index i = 0;
  while (std::getline(ss, line)) {
    const auto last = line.rfind(',');
    const auto before = line.rfind(',', last - 1);
    const int label = std::stoi(line.substr(before + 1, last - before - 1));
    const double d = std::stod(line.substr(last + 1));
    CHECK(d == discriminant_value(m, data.samples.points.row(i)));
    CHECK(label == classify(m, data.samples.points.row(i)));
    ++i;
  }
  CHECK(i == 60);
}

TEST_CASE("cli: classify rejects data of the wrong dimension") {
  const auto dir = scratch_dir("mismatch");
  write_two_point_csv(dir / "train.csv");
  const auto model = dir / "model.json";
  REQUIRE(cli("train --data \"" + (dir / "train.csv").string() + "\" --out \"" + model.string() + "\"",
              dir)
              .code == 0);
  std::ofstream(dir / "three.csv") << "x1,x2,x3\n1,2,3\n";
  const auto o = cli("classify --model \"" + model.string() + "\" --data \"" +
                         (dir / "three.csv").string() + "\"",
                     dir);
  CHECK(o.code == 1);
  CHECK(o.err.find("features") != std::string::npos);
}

TEST_CASE("cli: report emits a table and parseable JSON") {
  const auto dir = scratch_dir("report");
  write_two_point_csv(dir / "train.csv");
  const auto model = dir / "model.json";
  REQUIRE(cli("train --data \"" + (dir / "train.csv").string() + "\" --out \"" + model.string() +
                  "\" --kernel linear --C inf",
              dir)
              .code == 0);
  const auto o = cli("report --model \"" + model.string() + "\" --data \"" +
                         (dir / "train.csv").string() + "\" --out \"" + (dir / "r.json").string() + "\"",
                     dir);
  REQUIRE(o.code == 0);
  CHECK(o.out.find("eigenenergy_identity") != std::string::npos);
  const auto j = json::parse(slurp(dir / "r.json"));
  CHECK(j.at("dual_equilibrium").get<double>() == 0.0);
  CHECK(j.at("lambda1").get<double>() == doctest::Approx(2.0));
  const auto local = cli("report --model \"" + model.string() + "\"", dir);
  CHECK(local.code == 0);
}

TEST_CASE("cli: run writes artifacts and maps errors to exit codes") {
  const auto dir = scratch_dir("cli_run");
  auto j = small_config(dir / "out");
  write_json(dir / "ok.json", j);
  auto o = cli("run --config \"" + (dir / "ok.json").string() + "\" --seed 4", dir);
  CHECK(o.code == 0);
  CHECK(fs::exists(dir / "out" / "small_runs.csv"));
  CHECK(fs::exists(dir / "out" / "small_seed4.svg"));
  CHECK(read_rows(dir / "out" / "small_runs.csv").size() == 2);

  auto bad = j;
  bad["class2"].erase("covariance");
  write_json(dir / "bad.json", bad);
  o = cli("run --config \"" + (dir / "bad.json").string() + "\"", dir);
  CHECK(o.code == 2);
  CHECK(o.err.find("class2.covariance") != std::string::npos);

  o = cli("run --config \"" + (dir / "ok.json").string() + "\" --C -3", dir);
  CHECK(o.code == 2);
  o = cli("frobnicate", dir);
  CHECK(o.code == 2);

  auto stuck = j;
  stuck["solver"] = {{"max_iter", 1}};
  stuck["seeds"] = {1, 2};
  write_json(dir / "stuck.json", stuck);
  o = cli("run --config \"" + (dir / "stuck.json").string() + "\"", dir);
  CHECK(o.code == 3);
}
