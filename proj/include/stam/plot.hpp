#pragma once

// Minimal SVG line plots (no dependencies): axes, ticks, one polyline per
// series, legend. Enough for accuracy-vs-phase and LTM-growth visuals.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stam/errors.hpp"

namespace stam {

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
};

inline void write_line_plot_svg(const std::filesystem::path& path,
                                const std::string& title,
                                const std::string& x_label,
                                const std::string& y_label,
                                const std::vector<PlotSeries>& series) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  const int w = 720, h = 480, ml = 70, mr = 160, mt = 50, mb = 60;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr);
  };
  auto py = [&](double y) {
    return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb);
  };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("cannot write " + path.string());
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w
      << "' height='" << h << "' viewBox='0 0 " << w << " " << h << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << w / 2 << "' y='28' text-anchor='middle' "
         "font-family='sans-serif' font-size='16'>"
      << title << "</text>\n";
  // axes
  out << "<line x1='" << ml << "' y1='" << (h - mb) << "' x2='" << (w - mr)
      << "' y2='" << (h - mb) << "' stroke='black'/>\n"
      << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
      << (h - mb) << "' stroke='black'/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    out << "<text x='" << px(xv) << "' y='" << (h - mb + 18)
        << "' text-anchor='middle' font-family='sans-serif' font-size='11'>"
        << num(xv) << "</text>\n"
        << "<text x='" << (ml - 8) << "' y='" << (py(yv) + 4)
        << "' text-anchor='end' font-family='sans-serif' font-size='11'>"
        << num(yv) << "</text>\n"
        << "<line x1='" << px(xv) << "' y1='" << (h - mb) << "' x2='"
        << px(xv) << "' y2='" << (h - mb + 4) << "' stroke='black'/>\n"
        << "<line x1='" << (ml - 4) << "' y1='" << py(yv) << "' x2='" << ml
        << "' y2='" << py(yv) << "' stroke='black'/>\n";
  }
  out << "<text x='" << (ml + (w - ml - mr) / 2) << "' y='" << (h - 16)
      << "' text-anchor='middle' font-family='sans-serif' font-size='13'>"
      << x_label << "</text>\n"
      << "<text x='18' y='" << (mt + (h - mt - mb) / 2)
      << "' text-anchor='middle' font-family='sans-serif' font-size='13' "
         "transform='rotate(-90 18 "
      << (mt + (h - mt - mb) / 2) << ")'>" << y_label << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof kColors / sizeof *kColors)];
    out << "<polyline fill='none' stroke='" << color
        << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < series[s].x.size(); ++i)
      out << px(series[s].x[i]) << "," << py(series[s].y[i]) << " ";
    out << "'/>\n";
    const int ly = mt + 16 + static_cast<int>(s) * 18;
    out << "<line x1='" << (w - mr + 12) << "' y1='" << ly << "' x2='"
        << (w - mr + 36) << "' y2='" << ly << "' stroke='" << color
        << "' stroke-width='2'/>\n"
        << "<text x='" << (w - mr + 42) << "' y='" << (ly + 4)
        << "' font-family='sans-serif' font-size='11'>" << series[s].name
        << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw data_error("short write " + path.string());
}

}  // namespace stam
