#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqcd/csv.hpp"

namespace pqcd {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// minimal line chart: axes, labeled ranges, one polyline per series; points with
// nonfinite y are dropped so infeasible cells simply leave gaps
inline std::string svg_line_chart(const std::string& title, const std::string& x_label,
                                  const std::string& y_label,
                                  const std::vector<SvgSeries>& series) {
  if (series.empty()) throw std::invalid_argument("svg_line_chart: no series");
  const double width = 640, height = 480, ml = 70, mr = 20, mt = 40, mb = 50;
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const SvgSeries& s : series) {
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("svg_line_chart: series length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (!std::isfinite(x_min)) {
    x_min = 0;
    x_max = 1;
    y_min = 0;
    y_max = 1;
  }
  if (x_max - x_min < 1e-12) x_max = x_min + 1;
  if (y_max - y_min < 1e-12) y_max = y_min + 1;
  const auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr); };
  const auto py = [&](double y) {
    return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb);
  };
  static const char* kColors[] = {"#1f6fb2", "#d2542c", "#3a8f3d", "#8453a8", "#a07f20", "#348b8b"};

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 "
         "640 480\">\n";
  out += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  out += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + title + "</text>\n";
  out += "<line x1=\"" + format_number(ml) + "\" y1=\"" + format_number(height - mb) + "\" x2=\"" +
         format_number(width - mr) + "\" y2=\"" + format_number(height - mb) +
         "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + format_number(ml) + "\" y1=\"" + format_number(mt) + "\" x2=\"" +
         format_number(ml) + "\" y2=\"" + format_number(height - mb) + "\" stroke=\"black\"/>\n";
  out += "<text x=\"" + format_number(ml) + "\" y=\"" + format_number(height - mb + 20) +
         "\" font-family=\"sans-serif\" font-size=\"12\">" + format_number(x_min) + "</text>\n";
  out += "<text x=\"" + format_number(width - mr) + "\" y=\"" + format_number(height - mb + 20) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
         format_number(x_max) + "</text>\n";
  out += "<text x=\"" + format_number(ml - 8) + "\" y=\"" + format_number(height - mb) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
         format_number(y_min) + "</text>\n";
  out += "<text x=\"" + format_number(ml - 8) + "\" y=\"" + format_number(mt + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
         format_number(y_max) + "</text>\n";
  out += "<text x=\"" + format_number((ml + width - mr) / 2) + "\" y=\"" +
         format_number(height - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + x_label +
         "</text>\n";
  out += "<text x=\"16\" y=\"" + format_number((mt + height - mb) / 2) +
         "\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 " +
         format_number((mt + height - mb) / 2) + ")\" text-anchor=\"middle\">" + y_label +
         "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % 6];
    std::string points;
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      if (!points.empty()) points += " ";
      points += format_number(px(series[s].x[i])) + "," + format_number(py(series[s].y[i]));
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" "
           "points=\"" + points + "\"/>\n";
    out += "<text x=\"" + format_number(width - mr - 4) + "\" y=\"" +
           format_number(mt + 16.0 * static_cast<double>(s) + 12) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" + color +
           "\">" + series[s].label + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace pqcd
