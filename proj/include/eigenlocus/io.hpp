#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "eigenlocus/equilibrium.hpp"
#include "eigenlocus/model.hpp"

namespace eigenlocus {

inline constexpr const char* model_format_name = "eigenlocus-model";
inline constexpr int model_format_version = 1;

nlohmann::json model_to_json(const Eigenlocusd& m);
Eigenlocusd model_from_json(const nlohmann::json& j);

void save_model(const Eigenlocusd& m, const std::filesystem::path& path);
Eigenlocusd load_model(const std::filesystem::path& path);

/// C as it appears in files and on the command line: a positive number or "inf".
double parse_C(const std::string& text);
std::string format_C(double C);

nlohmann::json report_to_json(const EquilibriumReportd& r);

/// Field names and values in a fixed order, shared by the CSV and table writers.
std::vector<std::pair<std::string, double>> report_fields(const EquilibriumReportd& r);

/// Feature rows with optional labels. The header is x1..xd and, when present, label.
struct CsvData {
  Eigen::MatrixXd points;
  std::optional<Eigen::VectorXd> labels;
};

CsvData read_csv(const std::filesystem::path& path);
SampleSetd read_labeled_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const SampleSetd& samples);

/// %.17g, enough to read back the identical double.
std::string format_double(double v);

}  // namespace eigenlocus
