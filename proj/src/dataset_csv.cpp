#include <fstream>
#include <sstream>
#include <vector>

#include "eigenlocus/io.hpp"

namespace eigenlocus {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

double to_number(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    throw ParseError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  return v;
}

}  // namespace

CsvData read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  const auto header = split(line);
  if (header.empty()) throw ParseError(path.string() + ": empty header");
  const bool labeled = header.back() == "label";
  const std::size_t dim = header.size() - (labeled ? 1 : 0);
  if (dim == 0) throw ParseError(path.string() + ": no feature columns");

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " columns");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(to_number(c, path, lineno));
    rows.push_back(std::move(row));
  }

  CsvData data;
  const Index n = static_cast<Index>(rows.size());
  data.points.resize(n, static_cast<Index>(dim));
  if (labeled) data.labels = Eigen::VectorXd(n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < dim; ++k) data.points(i, static_cast<Index>(k)) = row[k];
    if (labeled) (*data.labels)(i) = row[dim];
  }
  return data;
}

SampleSetd read_labeled_csv(const std::filesystem::path& path) {
  CsvData data = read_csv(path);
  if (!data.labels) throw ParseError(path.string() + ": no label column");
  SampleSetd s{std::move(data.points), std::move(*data.labels)};
  try {
    check_binary_labels(s);
  } catch (const InvalidInput& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return s;
}

void write_csv(const std::filesystem::path& path, const SampleSetd& samples) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (Index k = 0; k < samples.dimension(); ++k) out << 'x' << (k + 1) << ',';
  out << "label\n";
  for (Index i = 0; i < samples.size(); ++i) {
    for (Index k = 0; k < samples.dimension(); ++k) out << format_double(samples.points(i, k)) << ',';
    out << (samples.labels(i) > 0 ? "1" : "-1") << '\n';
  }
}

}  // namespace eigenlocus
