#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "eigenlocus/experiment.hpp"
#include "eigenlocus/io.hpp"

namespace el = eigenlocus;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;
constexpr int kNotConverged = 3;

struct KernelFlags {
  std::optional<std::string> family;
  std::optional<double> gamma;
  std::optional<std::string> C;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--kernel", family, "kernel family: linear, poly2 or gaussian")
        ->check(CLI::IsMember({"linear", "poly2", "gaussian"}));
    cmd->add_option("--gamma", gamma, "gaussian kernel width (default 0.05)");
    cmd->add_option("--C", C, "regularization constant, a positive number or 'inf'");
  }

  el::KernelSpec kernel(el::KernelSpec base) const {
    if (family) base.family = el::parse_kernel_family(*family);
    if (gamma) base.gamma = *gamma;
    el::validate(base);
    return base;
  }
};

void warn_kernel(const el::KernelSpec& k) {
  if (auto w = el::kernel_warning(k)) std::cerr << "warning: " << *w << '\n';
}

void print_report_table(std::ostream& os, const el::EquilibriumReportd& r) {
  for (const auto& [name, value] : el::report_fields(r)) {
    char line[96];
    std::snprintf(line, sizeof line, "  %-24s %.6e\n", name.c_str(), value);
    os << line;
  }
}

int cmd_run(const std::string& config_path, const KernelFlags& flags,
            const std::optional<std::uint64_t>& seed, const std::optional<std::string>& out) {
  el::ExperimentConfig cfg;
  try {
    cfg = el::load_config(config_path);
    cfg.kernel = flags.kernel(cfg.kernel);
    if (flags.C) cfg.C = el::parse_C(*flags.C);
  } catch (const el::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (seed) cfg.seeds = {*seed};
  if (out) cfg.output_dir = *out;
  warn_kernel(cfg.kernel);

  const auto res = el::run_experiment(cfg);
  std::cout << cfg.name << ": kernel " << el::to_string(cfg.kernel.family) << ", C "
            << el::format_C(cfg.C) << ", n_train " << cfg.n_train << "/class, n_test " << cfg.n_test
            << '\n';
  for (const auto& r : res.runs) {
    std::printf("  seed %-6llu %-14s error %.4f  bayes %.4f  extreme %.3f\n",
                static_cast<unsigned long long>(r.seed), el::to_string(r.status).c_str(),
                r.error_rate, r.bayes_rate, r.extreme_fraction);
    if (!r.message.empty()) std::printf("    %s\n", r.message.c_str());
  }
  std::printf("  median error %.4f, median extreme fraction %.3f\n", res.median("error_rate"),
              res.median("extreme_fraction"));
  std::cout << "  wrote " << res.runs_csv.string() << ", " << res.summary_csv.string() << " and "
            << res.svgs.size() << " SVG file(s)\n";
  return res.all_failed_to_converge() ? kNotConverged : kOk;
}

int cmd_train(const std::string& data, const std::string& model_out, const KernelFlags& flags) {
  const el::SampleSetd samples = el::read_labeled_csv(data);
  const el::KernelSpec kernel = flags.kernel(el::KernelSpec::poly2());
  const double C = flags.C ? el::parse_C(*flags.C)
                           : el::default_C<double>(samples.size(), samples.dimension());
  warn_kernel(kernel);
  const auto tr = el::train_detailed(samples, kernel, C);
  el::save_model(tr.model, model_out);
  std::cout << "trained " << el::to_string(kernel.family) << " model, C " << el::format_C(C) << ": "
            << tr.model.size() << " extreme points (" << tr.model.l1 << " / " << tr.model.l2
            << "), " << tr.solution.iterations << " iterations, kappa0 "
            << el::format_double(tr.model.kappa0) << '\n';
  if (!tr.solution.converged) {
    std::cerr << "warning: solver stopped at the iteration limit without converging\n";
    return kNotConverged;
  }
  return kOk;
}

int cmd_classify(const std::string& model_path, const std::string& data,
                 const std::optional<std::string>& out) {
  const el::Eigenlocusd m = el::load_model(model_path);
  const el::CsvData csv = el::read_csv(data);
  if (csv.points.cols() != m.dimension())
    throw el::DimensionMismatch("data has " + std::to_string(csv.points.cols()) +
                                " features but the model expects " +
                                std::to_string(m.dimension()));
  std::ofstream file;
  if (out) {
    file.open(*out);
    if (!file) throw el::Error("cannot write " + *out);
  }
  std::ostream& os = out ? file : std::cout;
  for (el::Index k = 0; k < m.dimension(); ++k) os << 'x' << (k + 1) << ',';
  os << "predicted_label,discriminant_value\n";
  for (el::Index i = 0; i < csv.points.rows(); ++i) {
    const double d = el::discriminant_value(m, csv.points.row(i));
    for (el::Index k = 0; k < m.dimension(); ++k) os << el::format_double(csv.points(i, k)) << ',';
    os << (d >= 0 ? 1 : -1) << ',' << el::format_double(d) << '\n';
  }
  return kOk;
}

int cmd_report(const std::string& model_path, const std::optional<std::string>& data,
               const std::optional<std::string>& out) {
  el::Eigenlocusd m = el::load_model(model_path);
  el::EquilibriumReportd report;
  if (data) {
    // Q over the full training set; the extreme points are located by exact match.
    const el::SampleSetd samples = el::read_labeled_csv(*data);
    if (samples.dimension() != m.dimension())
      throw el::DimensionMismatch("data dimension does not match the model");
    m.source_indices.clear();
    for (el::Index a = 0; a < m.size(); ++a) {
      el::Index found = -1;
      for (el::Index i = 0; i < samples.size() && found < 0; ++i)
        if (samples.points.row(i) == m.extreme_points.row(a) && samples.labels(i) == m.labels(a))
          found = i;
      if (found < 0) throw el::InvalidInput("extreme point " + std::to_string(a) + " is not in the data");
      m.source_indices.push_back(found);
    }
    const double eps = std::isinf(m.C) ? 0.0 : 1.0 / m.C;
    report = el::full_report(m, el::build_gram(samples, m.kernel, eps));
  } else {
    report = el::full_report(m);
  }
  std::cout << "equilibrium report for " << model_path << " (" << m.size() << " extreme points)\n";
  print_report_table(std::cout, report);
  const std::string json = el::report_to_json(report).dump(2);
  if (out) {
    std::ofstream f(*out);
    if (!f) throw el::Error("cannot write " + *out);
    f << json << '\n';
  } else {
    std::cout << json << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel eigenaxis classifier: experiments, training, classification and reports"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment config over its seeds");
  std::string config;
  KernelFlags run_flags;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> run_out;
  run->add_option("--config", config, "experiment config (JSON)")->required();
  run_flags.add_to(run);
  run->add_option("--seed", seed, "run this seed only");
  run->add_option("--out", run_out, "output directory");

  auto* train = app.add_subcommand("train", "train a binary model on a labeled CSV");
  std::string train_data, model_out;
  KernelFlags train_flags;
  train->add_option("--data", train_data, "CSV with columns x1..xd,label")->required();
  train->add_option("--out", model_out, "model file to write")->required();
  train_flags.add_to(train);

  auto* cls = app.add_subcommand("classify", "classify the rows of a CSV with a saved model");
  std::string cls_model, cls_data;
  std::optional<std::string> cls_out;
  cls->add_option("--model", cls_model, "model file")->required();
  cls->add_option("--data", cls_data, "CSV with columns x1..xd[,label]")->required();
  cls->add_option("--out", cls_out, "predictions CSV (default stdout)");

  auto* rep = app.add_subcommand("report", "equilibrium report of a saved model");
  std::string rep_model;
  std::optional<std::string> rep_data, rep_out;
  rep->add_option("--model", rep_model, "model file")->required();
  rep->add_option("--data", rep_data, "training CSV; without it Q is built on the extreme points");
  rep->add_option("--out", rep_out, "write the JSON report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(config, run_flags, seed, run_out);
    if (*train) return cmd_train(train_data, model_out, train_flags);
    if (*cls) return cmd_classify(cls_model, cls_data, cls_out);
    if (*rep) return cmd_report(rep_model, rep_data, rep_out);
  } catch (const el::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
