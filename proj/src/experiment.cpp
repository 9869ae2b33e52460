#include "eigenlocus/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "eigenlocus/io.hpp"
#include "eigenlocus/level_sets.hpp"
#include "eigenlocus/svg.hpp"

namespace eigenlocus {

using nlohmann::json;

namespace {

const json& need(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + where + key + "'");
  return obj.at(key);
}

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + where + k + "'");
}

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("key '" + key + "' must be a number");
  return v.get<double>();
}

Index as_count(const json& v, const std::string& key, Index minimum) {
  if (!v.is_number_integer() || v.get<long long>() < minimum)
    throw ConfigError("key '" + key + "' must be an integer >= " + std::to_string(minimum));
  return static_cast<Index>(v.get<long long>());
}

GaussianClassSpec parse_class(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError("key '" + where + "' must be an object");
  only_keys(j, {"mean", "covariance"}, where + ".");
  const json& mean = need(j, "mean", where + ".");
  const json& cov = need(j, "covariance", where + ".");
  if (!mean.is_array() || mean.empty())
    throw ConfigError("key '" + where + ".mean' must be a non-empty array");
  GaussianClassSpec spec;
  const Index d = static_cast<Index>(mean.size());
  spec.mean.resize(d);
  for (Index k = 0; k < d; ++k) spec.mean(k) = as_number(mean[std::size_t(k)], where + ".mean");
  if (!cov.is_array() || static_cast<Index>(cov.size()) != d)
    throw ConfigError("key '" + where + ".covariance' must be a " + std::to_string(d) + "x" +
                      std::to_string(d) + " array");
  spec.covariance.resize(d, d);
  for (Index r = 0; r < d; ++r) {
    const json& row = cov[std::size_t(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != d)
      throw ConfigError("key '" + where + ".covariance' must be a " + std::to_string(d) + "x" +
                        std::to_string(d) + " array");
    for (Index c = 0; c < d; ++c)
      spec.covariance(r, c) = as_number(row[std::size_t(c)], where + ".covariance");
  }
  try {
    cholesky_factor(spec);
  } catch (const Error& e) {
    throw ConfigError("key '" + where + ".covariance': " + e.what());
  }
  return spec;
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  only_keys(j, {"name", "class1", "class2", "dataset", "kernel", "C", "n_train", "n_test", "seeds",
                "grid", "svg", "output_dir", "solver", "description"},
            "");
  ExperimentConfig cfg;
  const json& name = need(j, "name", "");
  if (!name.is_string() || name.get<std::string>().empty())
    throw ConfigError("key 'name' must be a non-empty string");
  cfg.name = name.get<std::string>();

  const bool has_classes = j.contains("class1") || j.contains("class2");
  if (j.contains("dataset")) {
    if (has_classes) throw ConfigError("give either 'dataset' or 'class1'/'class2', not both");
    if (!j["dataset"].is_string()) throw ConfigError("key 'dataset' must be a path string");
    std::filesystem::path p = j["dataset"].get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    if (!std::filesystem::exists(p)) throw ConfigError("key 'dataset': no such file " + p.string());
    cfg.dataset = p;
  } else {
    cfg.class1 = parse_class(need(j, "class1", ""), "class1");
    cfg.class2 = parse_class(need(j, "class2", ""), "class2");
    if (cfg.class1->mean.size() != cfg.class2->mean.size())
      throw ConfigError("keys 'class1' and 'class2' differ in dimension");
  }

  const json& kernel = need(j, "kernel", "");
  if (!kernel.is_object()) throw ConfigError("key 'kernel' must be an object");
  only_keys(kernel, {"family", "gamma"}, "kernel.");
  const json& family = need(kernel, "family", "kernel.");
  if (!family.is_string()) throw ConfigError("key 'kernel.family' must be a string");
  try {
    cfg.kernel.family = parse_kernel_family(family.get<std::string>());
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("key 'kernel.family': ") + e.what());
  }
  if (kernel.contains("gamma")) {
    cfg.kernel.gamma = as_number(kernel["gamma"], "kernel.gamma");
    if (!(cfg.kernel.gamma > 0)) throw ConfigError("key 'kernel.gamma' must be positive");
  }

  const json& c = need(j, "C", "");
  try {
    cfg.C = c.is_string() ? parse_C(c.get<std::string>()) : parse_C(format_double(as_number(c, "C")));
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("key 'C': ") + e.what());
  }

  if (j.contains("n_train")) cfg.n_train = as_count(j["n_train"], "n_train", 1);
  if (j.contains("n_test")) cfg.n_test = as_count(j["n_test"], "n_test", 1000);
  const json& seeds = need(j, "seeds", "");
  if (!seeds.is_array() || seeds.empty()) throw ConfigError("key 'seeds' must be a non-empty array");
  for (const auto& s : seeds) {
    if (!s.is_number_integer() || s.get<long long>() < 0)
      throw ConfigError("key 'seeds' must hold nonnegative integers");
    cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    if (!g.is_object()) throw ConfigError("key 'grid' must be an object");
    only_keys(g, {"resolution", "padding_sd"}, "grid.");
    if (g.contains("resolution")) cfg.grid_resolution = as_count(g["resolution"], "grid.resolution", 16);
    if (g.contains("padding_sd")) {
      cfg.grid_padding = as_number(g["padding_sd"], "grid.padding_sd");
      if (cfg.grid_padding < 0) throw ConfigError("key 'grid.padding_sd' must be nonnegative");
    }
  }
  if (j.contains("svg")) {
    if (!j["svg"].is_boolean()) throw ConfigError("key 'svg' must be true or false");
    cfg.write_svg = j["svg"].get<bool>();
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    if (!s.is_object()) throw ConfigError("key 'solver' must be an object");
    only_keys(s, {"tol", "max_iter"}, "solver.");
    if (s.contains("tol")) {
      cfg.solver.tol = as_number(s["tol"], "solver.tol");
      if (!(cfg.solver.tol > 0)) throw ConfigError("key 'solver.tol' must be positive");
    }
    if (s.contains("max_iter")) cfg.solver.max_iter = as_count(s["max_iter"], "solver.max_iter", 1);
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigError("key 'output_dir' must be a string");
    cfg.output_dir = j["output_dir"].get<std::string>();
  } else {
    cfg.output_dir = std::filesystem::path("out") / cfg.name;
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::not_converged: return "not_converged";
    case RunStatus::failed: return "failed";
  }
  return "unknown";
}

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                    std::optional<ScatterPlot>* plot) {
  SeedResult r;
  r.seed = seed;
  r.bayes_rate = nan();

  SampleSetd train_set;
  if (cfg.dataset) {
    train_set = read_labeled_csv(*cfg.dataset);
  } else {
    train_set = sample_dataset(*cfg.class1, *cfg.class2, cfg.n_train, cfg.n_train, seed).samples;
  }

  TrainResult<double> tr;
  try {
    tr = train_detailed(train_set, cfg.kernel, cfg.C, cfg.solver);
  } catch (const Error& e) {
    r.status = RunStatus::failed;
    r.message = e.what();
    r.error_rate = r.error_std = r.extreme_fraction = r.kkt_stationarity = r.kappa0 = nan();
    return r;
  }
  const Eigenlocusd& m = tr.model;
  r.status = tr.solution.converged ? RunStatus::ok : RunStatus::not_converged;
  r.n_extreme = m.size();
  r.extreme_fraction = extreme_fraction(m, train_set.size());
  r.iterations = tr.solution.iterations;
  r.kkt_stationarity = tr.solution.kkt_stationarity;
  r.kappa0 = m.kappa0;

  auto model_label = [&](const Eigen::VectorXd& x) { return classify(m, x); };
  if (cfg.dataset) {
    const auto e = error_rate_on(model_label, train_set);
    r.error_rate = e.rate;
    r.error_std = e.std;
  } else {
    const Dataset test = sample_test_set(*cfg.class1, *cfg.class2, cfg.n_test, seed);
    const auto e = error_rate_on(model_label, test.samples);
    r.error_rate = e.rate;
    r.error_std = e.std;
    const BayesOracle oracle(*cfg.class1, *cfg.class2);
    r.bayes_rate =
        error_rate_on([&](const Eigen::VectorXd& x) { return oracle.classify(x); }, test.samples).rate;
  }
  r.report = full_report(m, tr.problem.gram);

  if (plot && train_set.dimension() == 2) {
    ScatterPlot p;
    p.title = cfg.name + " (seed " + std::to_string(seed) + ")";
    p.grid = default_grid(train_set.points, cfg.grid_resolution, cfg.grid_padding);
    p.traces = trace_level_sets(m, p.grid);
    p.extreme = m.source_indices;
    p.samples = std::move(train_set);
    *plot = std::move(p);
  }
  return r;
}

SummaryRow summarize(const std::string& metric, std::vector<double> values) {
  SummaryRow row;
  row.metric = metric;
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }),
               values.end());
  row.count = static_cast<Index>(values.size());
  if (values.empty()) {
    row.median = row.q1 = row.q3 = nan();
    return row;
  }
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * double(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - double(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  row.median = quantile(0.5);
  row.q1 = quantile(0.25);
  row.q3 = quantile(0.75);
  return row;
}

bool ExperimentResult::all_failed_to_converge() const {
  return std::none_of(runs.begin(), runs.end(),
                      [](const SeedResult& r) { return r.status == RunStatus::ok; });
}

double ExperimentResult::median(const std::string& metric) const {
  for (const auto& s : summary)
    if (s.metric == metric) return s.median;
  throw InvalidInput("no summary metric '" + metric + "'");
}

namespace {

std::vector<std::pair<std::string, double>> row_values(const SeedResult& r) {
  std::vector<std::pair<std::string, double>> v = {
      {"error_rate", r.error_rate},
      {"error_std", r.error_std},
      {"bayes_rate", r.bayes_rate},
      {"extreme_fraction", r.extreme_fraction},
      {"n_extreme", double(r.n_extreme)},
      {"iterations", double(r.iterations)},
      {"kkt_stationarity", r.kkt_stationarity},
      {"kappa0", r.kappa0},
  };
  for (auto& f : report_fields(r.report))
    v.emplace_back(f.first, r.status == RunStatus::failed ? nan() : f.second);
  return v;
}

void write_atomically(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files) {
  ExperimentResult res;
  if (write_files) std::filesystem::create_directories(cfg.output_dir);

  for (std::uint64_t seed : cfg.seeds) {
    std::optional<ScatterPlot> plot;
    res.runs.push_back(run_seed(cfg, seed, write_files && cfg.write_svg ? &plot : nullptr));
    if (plot) {
      auto path = cfg.output_dir / (cfg.name + "_seed" + std::to_string(seed) + ".svg");
      write_svg(path, *plot);
      res.svgs.push_back(path);
    }
  }

  std::vector<std::string> metrics;
  for (const auto& [k, v] : row_values(SeedResult{})) metrics.push_back(k);
  for (const auto& metric : metrics) {
    std::vector<double> values;
    for (const auto& r : res.runs) {
      if (r.status == RunStatus::failed) continue;
      for (const auto& [k, v] : row_values(r))
        if (k == metric) values.push_back(v);
    }
    res.summary.push_back(summarize(metric, values));
  }

  if (!write_files) return res;

  std::string runs = "seed,status";
  for (const auto& m : metrics) runs += "," + m;
  runs += "\n";
  for (const auto& r : res.runs) {
    runs += std::to_string(r.seed) + "," + to_string(r.status);
    for (const auto& [k, v] : row_values(r)) runs += "," + format_double(v);
    runs += "\n";
  }
  res.runs_csv = cfg.output_dir / (cfg.name + "_runs.csv");
  write_atomically(res.runs_csv, runs);

  std::string summary = "metric,median,q1,q3,iqr,count\n";
  for (const auto& s : res.summary)
    summary += s.metric + "," + format_double(s.median) + "," + format_double(s.q1) + "," +
               format_double(s.q3) + "," + format_double(s.iqr()) + "," + std::to_string(s.count) +
               "\n";
  res.summary_csv = cfg.output_dir / (cfg.name + "_summary.csv");
  write_atomically(res.summary_csv, summary);
  return res;
}

}  // namespace eigenlocus
