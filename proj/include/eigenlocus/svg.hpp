#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "eigenlocus/level_sets.hpp"

namespace eigenlocus {

struct ScatterPlot {
  std::string title;
  SampleSetd samples;               // 2-D
  std::vector<Index> extreme;       // rows of `samples` drawn circled
  std::vector<LevelSetTrace> traces;  // levels -1, 0, +1
  GridSpec grid;
};

/// Self-contained SVG. Polyline vertices are written in data coordinates with full
/// precision and placed by a single group transform.
std::string render_svg(const ScatterPlot& plot);
void write_svg(const std::filesystem::path& path, const ScatterPlot& plot);

}  // namespace eigenlocus
