#pragma once

#include <array>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "eigenlocus/model.hpp"

namespace eigenlocus {

/// Axis-aligned 2-D grid with `resolution` cells along each axis.
struct GridSpec {
  double xmin = -1, xmax = 1;
  double ymin = -1, ymax = 1;
  Index resolution = 256;

  double dx() const { return (xmax - xmin) / static_cast<double>(resolution); }
  double dy() const { return (ymax - ymin) / static_cast<double>(resolution); }
};

/// Bounding box of the rows of `points`, padded by `pad_sd` sample standard deviations.
template <typename Derived>
GridSpec default_grid(const Eigen::MatrixBase<Derived>& points, Index resolution = 256,
                      double pad_sd = 3.0) {
  if (points.cols() != 2) throw DimensionMismatch("default_grid: points must be 2-D");
  if (points.rows() < 1) throw InvalidInput("default_grid: no points");
  GridSpec g;
  g.resolution = resolution;
  std::array<double, 2> lo{}, hi{};
  for (Index c = 0; c < 2; ++c) {
    const auto col = points.col(c).template cast<double>();
    const double mean = col.mean();
    const double var =
        points.rows() > 1 ? (col.array() - mean).square().sum() / double(points.rows() - 1) : 0.0;
    double pad = pad_sd * std::sqrt(var);
    if (pad == 0.0) pad = 1.0;
    lo[c] = col.minCoeff() - pad;
    hi[c] = col.maxCoeff() + pad;
  }
  g.xmin = lo[0];
  g.xmax = hi[0];
  g.ymin = lo[1];
  g.ymax = hi[1];
  return g;
}

struct Point2 {
  double x = 0;
  double y = 0;
};

using Polyline = std::vector<Point2>;

struct LevelSetTrace {
  double level = 0;
  std::vector<Polyline> polylines;
  double tolerance = 0;  // largest change of d across any crossed grid edge
  GridSpec grid;

  bool empty() const { return polylines.empty(); }
  std::size_t vertex_count() const {
    std::size_t n = 0;
    for (const auto& p : polylines) n += p.size();
    return n;
  }
};

/// Values of f at the (resolution+1)^2 grid nodes, x fastest.
template <typename F>
std::vector<double> sample_grid(const F& f, const GridSpec& g) {
  const Index nodes = g.resolution + 1;
  std::vector<double> v(static_cast<std::size_t>(nodes * nodes));
  Eigen::Vector2d p;
  for (Index j = 0; j < nodes; ++j) {
    for (Index i = 0; i < nodes; ++i) {
      p << g.xmin + g.dx() * double(i), g.ymin + g.dy() * double(j);
      v[static_cast<std::size_t>(j * nodes + i)] = static_cast<double>(f(p));
    }
  }
  return v;
}

/// Marching squares on precomputed node values. Saddle cells are split using the
/// average of the four corners. Segments sharing an edge are chained into polylines.
inline LevelSetTrace trace_contour(const std::vector<double>& values, const GridSpec& g,
                                   double level) {
  const Index res = g.resolution;
  const Index nodes = res + 1;
  auto at = [&](Index i, Index j) { return values[static_cast<std::size_t>(j * nodes + i)]; };
  const Index horizontal = res * nodes;
  auto h_edge = [&](Index i, Index j) { return j * res + i; };
  auto v_edge = [&](Index i, Index j) { return horizontal + j * nodes + i; };

  LevelSetTrace trace;
  trace.level = level;
  trace.grid = g;

  std::unordered_map<Index, Point2> vertex;
  auto crossing = [&](Index id, Index ia, Index ja, Index ib, Index jb) {
    const double fa = at(ia, ja), fb = at(ib, jb);
    if (vertex.find(id) == vertex.end()) {
      const double t = (level - fa) / (fb - fa);
      const double xa = g.xmin + g.dx() * double(ia), ya = g.ymin + g.dy() * double(ja);
      const double xb = g.xmin + g.dx() * double(ib), yb = g.ymin + g.dy() * double(jb);
      vertex[id] = {xa + t * (xb - xa), ya + t * (yb - ya)};
      trace.tolerance = std::max(trace.tolerance, std::abs(fb - fa));
    }
    return id;
  };

  std::vector<std::array<Index, 2>> segments;
  for (Index j = 0; j < res; ++j) {
    for (Index i = 0; i < res; ++i) {
      const double c0 = at(i, j), c1 = at(i + 1, j), c2 = at(i + 1, j + 1), c3 = at(i, j + 1);
      const bool b0 = c0 >= level, b1 = c1 >= level, b2 = c2 >= level, b3 = c3 >= level;
      const int code = int(b0) | (int(b1) << 1) | (int(b2) << 2) | (int(b3) << 3);
      if (code == 0 || code == 15) continue;
      // edges: 0 bottom (c0-c1), 1 right (c1-c2), 2 top (c3-c2), 3 left (c0-c3)
      auto edge = [&](int e) -> Index {
        switch (e) {
          case 0: return crossing(h_edge(i, j), i, j, i + 1, j);
          case 1: return crossing(v_edge(i + 1, j), i + 1, j, i + 1, j + 1);
          case 2: return crossing(h_edge(i, j + 1), i, j + 1, i + 1, j + 1);
          default: return crossing(v_edge(i, j), i, j, i, j + 1);
        }
      };
      std::array<bool, 4> crossed{b0 != b1, b1 != b2, b3 != b2, b0 != b3};
      if (code == 5 || code == 10) {
        const bool centre = 0.25 * (c0 + c1 + c2 + c3) >= level;
        // If the centre agrees with c0, the c0/c2 region is connected and c1, c3 are cut off.
        if (centre == b0) {
          segments.push_back({edge(0), edge(1)});
          segments.push_back({edge(2), edge(3)});
        } else {
          segments.push_back({edge(3), edge(0)});
          segments.push_back({edge(1), edge(2)});
        }
        continue;
      }
      std::array<int, 2> ends{};
      int k = 0;
      for (int e = 0; e < 4; ++e)
        if (crossed[static_cast<std::size_t>(e)]) ends[static_cast<std::size_t>(k++)] = e;
      segments.push_back({edge(ends[0]), edge(ends[1])});
    }
  }

  // Chain segments through shared edge vertices.
  std::unordered_map<Index, std::vector<std::size_t>> incident;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    incident[segments[s][0]].push_back(s);
    incident[segments[s][1]].push_back(s);
  }
  std::vector<bool> used(segments.size(), false);
  auto walk = [&](std::size_t first, Index start) {
    Polyline line;
    line.push_back(vertex[start]);
    Index cur = start;
    std::size_t seg = first;
    while (true) {
      used[seg] = true;
      const Index next = segments[seg][0] == cur ? segments[seg][1] : segments[seg][0];
      line.push_back(vertex[next]);
      cur = next;
      std::size_t follow = segments.size();
      for (std::size_t cand : incident[cur])
        if (!used[cand]) follow = cand;
      if (follow == segments.size()) break;
      seg = follow;
    }
    return line;
  };
  // Open chains start at edges touched by a single segment (the grid border).
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (used[s]) continue;
    for (Index end : segments[s]) {
      if (incident[end].size() == 1) {
        trace.polylines.push_back(walk(s, end));
        break;
      }
    }
  }
  for (std::size_t s = 0; s < segments.size(); ++s)
    if (!used[s]) trace.polylines.push_back(walk(s, segments[s][0]));
  return trace;
}

template <typename F>
LevelSetTrace trace_function(const F& f, const GridSpec& g, double level) {
  if (g.resolution < 16) throw InvalidInput("grid resolution must be at least 16");
  if (!(g.xmax > g.xmin && g.ymax > g.ymin)) throw InvalidInput("grid bounds are empty");
  return trace_contour(sample_grid(f, g), g, level);
}

/// Boundary d = 0 and the borders d = -1, +1 of a 2-D model, in the order -1, 0, +1.
template <typename Scalar>
std::vector<LevelSetTrace> trace_level_sets(const Eigenlocus<Scalar>& m, const GridSpec& g) {
  if (m.dimension() != 2) throw DimensionMismatch("level-set tracing needs a 2-D model");
  if (g.resolution < 16) throw InvalidInput("grid resolution must be at least 16");
  if (!(g.xmax > g.xmin && g.ymax > g.ymin)) throw InvalidInput("grid bounds are empty");
  const auto values = sample_grid(
      [&](const Eigen::Vector2d& p) { return discriminant_value(m, p.cast<Scalar>()); }, g);
  std::vector<LevelSetTrace> out;
  for (double level : {-1.0, 0.0, 1.0}) out.push_back(trace_contour(values, g, level));
  return out;
}

}  // namespace eigenlocus
