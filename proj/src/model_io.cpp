#include "eigenlocus/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace eigenlocus {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_C(const std::string& text) {
  if (text == "inf" || text == "infinity" || text == "Inf") return infinity<double>();
  std::size_t used = 0;
  double c = 0;
  try {
    c = std::stod(text, &used);
  } catch (const std::exception&) {
    throw InvalidInput("C must be a positive number or 'inf', got '" + text + "'");
  }
  if (used != text.size() || !(c > 0))
    throw InvalidInput("C must be a positive number or 'inf', got '" + text + "'");
  return c;
}

std::string format_C(double C) { return std::isinf(C) ? "inf" : format_double(C); }

json model_to_json(const Eigenlocusd& m) {
  json j;
  j["format"] = model_format_name;
  j["version"] = model_format_version;
  j["kernel"] = {{"family", std::string(to_string(m.kernel.family))}, {"gamma", m.kernel.gamma}};
  if (std::isinf(m.C))
    j["C"] = "inf";
  else
    j["C"] = m.C;
  j["dimension"] = m.dimension();
  j["kappa0"] = m.kappa0;
  json points = json::array();
  for (Index i = 0; i < m.size(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.dimension(); ++k) row.push_back(m.extreme_points(i, k));
    points.push_back(std::move(row));
  }
  j["extreme_points"] = std::move(points);
  auto vec = [](const Eigen::VectorXd& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
  };
  j["labels"] = json::array();
  for (Index i = 0; i < m.size(); ++i) j["labels"].push_back(m.labels(i) > 0 ? 1 : -1);
  j["psi"] = vec(m.psi);
  j["xi"] = vec(m.xi);
  return j;
}

namespace {

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw ParseError(std::string("model file is missing '") + key + "'");
  return j.at(key);
}

double number(const json& j, const char* what) {
  if (!j.is_number()) throw ParseError(std::string("model field '") + what + "' is not a number");
  return j.get<double>();
}

Eigen::VectorXd number_array(const json& j, const char* what, Index expected) {
  if (!j.is_array() || static_cast<Index>(j.size()) != expected)
    throw ParseError(std::string("model field '") + what + "' has the wrong length");
  Eigen::VectorXd v(expected);
  for (Index i = 0; i < expected; ++i) v(i) = number(j[static_cast<std::size_t>(i)], what);
  return v;
}

}  // namespace

Eigenlocusd model_from_json(const json& j) {
  if (require(j, "format") != model_format_name) throw ParseError("not an eigenlocus model file");
  const json& version = require(j, "version");
  if (!version.is_number_integer() || version.get<int>() != model_format_version)
    throw VersionMismatch("unsupported model format version " + version.dump());

  Eigenlocusd m;
  const json& kernel = require(j, "kernel");
  const json& family = require(kernel, "family");
  if (!family.is_string()) throw ParseError("kernel family must be a string");
  try {
    m.kernel.family = parse_kernel_family(family.get<std::string>());
  } catch (const InvalidInput& e) {
    throw ParseError(e.what());
  }
  m.kernel.gamma = number(require(kernel, "gamma"), "gamma");

  const json& c = require(j, "C");
  if (c.is_string()) {
    if (c.get<std::string>() != "inf") throw ParseError("C must be a number or \"inf\"");
    m.C = infinity<double>();
  } else {
    m.C = number(c, "C");
    if (!(m.C > 0)) throw ParseError("C must be positive");
  }
  m.kappa0 = number(require(j, "kappa0"), "kappa0");

  const json& dim_j = require(j, "dimension");
  if (!dim_j.is_number_integer() || dim_j.get<Index>() < 1) throw ParseError("bad dimension");
  const Index dim = dim_j.get<Index>();
  const json& pts = require(j, "extreme_points");
  if (!pts.is_array()) throw ParseError("extreme_points must be an array");
  const Index l = static_cast<Index>(pts.size());
  m.extreme_points.resize(l, dim);
  for (Index i = 0; i < l; ++i)
    m.extreme_points.row(i) = number_array(pts[static_cast<std::size_t>(i)], "extreme_points", dim);
  m.labels = number_array(require(j, "labels"), "labels", l);
  m.psi = number_array(require(j, "psi"), "psi", l);
  m.xi = number_array(require(j, "xi"), "xi", l);
  for (Index i = 0; i < l; ++i) {
    if (m.labels(i) != 1.0 && m.labels(i) != -1.0) throw ParseError("labels must be +1 or -1");
    if (!(m.psi(i) > 0)) throw ParseError("psi entries must be positive");
    (m.labels(i) > 0 ? m.l1 : m.l2) += 1;
  }
  if (m.l1 == 0 || m.l2 == 0) throw ParseError("model needs extreme points from both classes");
  return m;
}

void save_model(const Eigenlocusd& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << model_to_json(m).dump(1) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

Eigenlocusd load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

std::vector<std::pair<std::string, double>> report_fields(const EquilibriumReportd& r) {
  return {
      {"dual_equilibrium", r.dual_equilibrium},
      {"primal_equilibrium", r.primal_equilibrium},
      {"eigenenergy_identity", r.eigenenergy_identity},
      {"class1_energy", r.class1_energy},
      {"class2_energy", r.class2_energy},
      {"energy_split", r.energy_split},
      {"cosine_balance_1", r.cosine_balance_1},
      {"cosine_balance_2", r.cosine_balance_2},
      {"eigen_relation", r.eigen_relation},
      {"eigen_alignment", r.eigen_alignment},
      {"side_norm_gap", r.side_norm_gap},
      {"delta_y", r.delta_y},
      {"lambda1", r.lambda1},
      {"integration_constant_1", r.integration_constant_1},
      {"integration_constant_2", r.integration_constant_2},
  };
}

json report_to_json(const EquilibriumReportd& r) {
  json j = json::object();
  for (const auto& [name, value] : report_fields(r)) j[name] = value;
  return j;
}

}  // namespace eigenlocus
