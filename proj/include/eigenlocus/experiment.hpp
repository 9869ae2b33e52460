#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eigenlocus/equilibrium.hpp"
#include "eigenlocus/gaussian_lab.hpp"
#include "eigenlocus/svg.hpp"

namespace eigenlocus {

/// One experiment: either two Gaussian classes or a labeled CSV, a kernel, C, and the
/// seeds to repeat it with. The JSON schema is documented in docs/config-schema.md.
struct ExperimentConfig {
  std::string name;
  std::optional<GaussianClassSpec> class1, class2;
  std::optional<std::filesystem::path> dataset;
  KernelSpec kernel;
  double C = 50;
  Index n_train = 200;  // per class
  Index n_test = 10000;
  std::vector<std::uint64_t> seeds;
  Index grid_resolution = 256;
  double grid_padding = 3.0;
  bool write_svg = true;
  std::filesystem::path output_dir = "out";
  SolverOptions solver;
};

/// Validates `j` against the schema. Relative dataset paths resolve against `base_dir`.
/// Throws ConfigError naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

enum class RunStatus { ok, not_converged, failed };

struct SeedResult {
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::ok;
  std::string message;
  double error_rate = 0;
  double error_std = 0;
  double bayes_rate = 0;  // NaN without class specs
  double extreme_fraction = 0;
  Index n_extreme = 0;
  Index iterations = 0;
  double kkt_stationarity = 0;
  double kappa0 = 0;
  EquilibriumReportd report;
};

struct SummaryRow {
  std::string metric;
  double median = 0, q1 = 0, q3 = 0;
  Index count = 0;
  double iqr() const { return q3 - q1; }
};

struct ExperimentResult {
  std::vector<SeedResult> runs;
  std::vector<SummaryRow> summary;
  std::filesystem::path runs_csv, summary_csv;
  std::vector<std::filesystem::path> svgs;

  bool all_failed_to_converge() const;
  double median(const std::string& metric) const;
};

/// One seed, no files written.
SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                    std::optional<ScatterPlot>* plot = nullptr);

/// All seeds. Writes <name>_runs.csv, <name>_summary.csv and one SVG per seed (2-D only).
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files = true);

/// Median and quartiles by linear interpolation between order statistics.
SummaryRow summarize(const std::string& metric, std::vector<double> values);

std::string to_string(RunStatus s);

}  // namespace eigenlocus
