#include "eigenlocus/svg.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "eigenlocus/io.hpp"

namespace eigenlocus {

namespace {

constexpr double kWidth = 640, kHeight = 640;
constexpr double kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;

const char* level_colour(double level) {
  if (level > 0.5) return "#d62728";   // +1 border
  if (level < -0.5) return "#1f4fd6";  // -1 border
  return "#000000";
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string render_svg(const ScatterPlot& plot) {
  const GridSpec& g = plot.grid;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const double sx = pw / (g.xmax - g.xmin), sy = ph / (g.ymax - g.ymin);
  auto px = [&](double x) { return kLeft + (x - g.xmin) * sx; };
  auto py = [&](double y) { return kTop + ph - (y - g.ymin) * sy; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kLeft << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
    << escape(plot.title) << "</text>\n";
  o << "<defs><clipPath id=\"plot\"><rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
    << "\" height=\"" << ph << "\"/></clipPath></defs>\n";

  // axes and ticks
  o << "<g stroke=\"#444\" fill=\"none\"><rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
    << pw << "\" height=\"" << ph << "\"/></g>\n";
  o << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#444\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = g.xmin + (g.xmax - g.xmin) * t / 4.0;
    const double yv = g.ymin + (g.ymax - g.ymin) * t / 4.0;
    o << "<text x=\"" << px(xv) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
      << tick(xv) << "</text>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 3 << "\" text-anchor=\"end\">" << tick(yv)
      << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12
    << "\" text-anchor=\"middle\">x1</text>\n";
  o << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << kTop + ph / 2 << ")\">x2</text>\n</g>\n";

  o << "<g clip-path=\"url(#plot)\">\n";
  // samples: class one filled red-ish, class two blue-ish
  for (Index i = 0; i < plot.samples.size(); ++i) {
    const bool one = plot.samples.labels(i) > 0;
    o << "<circle cx=\"" << px(plot.samples.points(i, 0)) << "\" cy=\""
      << py(plot.samples.points(i, 1)) << "\" r=\"2\" fill=\"" << (one ? "#e377c2" : "#17becf")
      << "\"/>\n";
  }
  for (Index i : plot.extreme) {
    o << "<circle cx=\"" << px(plot.samples.points(i, 0)) << "\" cy=\""
      << py(plot.samples.points(i, 1)) << "\" r=\"4.5\" fill=\"none\" stroke=\"#333\""
      << " stroke-width=\"0.8\"/>\n";
  }
  // level sets in data coordinates
  o << "<g transform=\"matrix(" << sx << " 0 0 " << -sy << ' ' << kLeft - g.xmin * sx << ' '
    << kTop + ph + g.ymin * sy << ")\" fill=\"none\">\n";
  for (const auto& tr : plot.traces) {
    for (const auto& line : tr.polylines) {
      o << "<polyline class=\"level\" data-level=\"" << tr.level << "\" stroke=\""
        << level_colour(tr.level) << "\" stroke-width=\"1.6\" vector-effect=\"non-scaling-stroke\""
        << " points=\"";
      for (std::size_t k = 0; k < line.size(); ++k) {
        if (k) o << ' ';
        o << format_double(line[k].x) << ',' << format_double(line[k].y);
      }
      o << "\"/>\n";
    }
  }
  o << "</g>\n</g>\n";

  // legend
  const double lx = kWidth - kRight + 14;
  double ly = kTop + 10;
  o << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  auto line_entry = [&](const char* colour, const char* text) {
    o << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 20 << "\" y2=\"" << ly
      << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/><text x=\"" << lx + 26 << "\" y=\""
      << ly + 4 << "\">" << text << "</text>\n";
    ly += 18;
  };
  auto dot_entry = [&](const char* fill, const char* stroke, double r, const char* text) {
    o << "<circle cx=\"" << lx + 10 << "\" cy=\"" << ly << "\" r=\"" << r << "\" fill=\"" << fill
      << "\" stroke=\"" << stroke << "\"/><text x=\"" << lx + 26 << "\" y=\"" << ly + 4 << "\">"
      << text << "</text>\n";
    ly += 18;
  };
  line_entry("#000000", "d(s) = 0");
  line_entry("#d62728", "d(s) = +1");
  line_entry("#1f4fd6", "d(s) = -1");
  dot_entry("#e377c2", "none", 3, "class +1");
  dot_entry("#17becf", "none", 3, "class -1");
  dot_entry("none", "#333", 4.5, "extreme point");
  o << "</g>\n</svg>\n";
  return o.str();
}

void write_svg(const std::filesystem::path& path, const ScatterPlot& plot) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << render_svg(plot);
}

}  // namespace eigenlocus
