#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "shapecon/io.hpp"
#include "shapecon/region_grid.hpp"
#include "shapecon/topo.hpp"

// Minimal SVG renderings of the barcode, annexation curve and embedding.

namespace shapecon {

namespace detail {

inline std::string svg_open(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
         "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline const char* palette(std::size_t i) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  return kColors[i % 8];
}

}  // namespace detail

/// One horizontal bar per vertex, sorted by death; the survivor runs to the
/// right edge.
inline std::string barcode_svg(const Filtration& f) {
  std::vector<Bar> bars = f.barcode;
  std::stable_sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) { return a.death < b.death; });
  const int w = 600;
  const int row = 6;
  const int h = std::max(40, static_cast<int>(bars.size()) * row + 20);
  std::string s = detail::svg_open(w, h);
  const double x0 = 10.0;
  const double span = w - 20.0;
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double end = std::isinf(bars[i].death) ? 1.0 : bars[i].death;
    const double y = 10.0 + static_cast<double>(i) * row;
    s += "<line x1=\"" + detail::fmt(x0 + bars[i].birth * span) + "\" y1=\"" + detail::fmt(y) +
         "\" x2=\"" + detail::fmt(x0 + std::max(end * span, 1.0)) + "\" y2=\"" + detail::fmt(y) +
         "\" stroke=\"" + (std::isinf(bars[i].death) ? "#d62728" : "#1f77b4") +
         "\" stroke-width=\"4\"/>\n";
  }
  return s + "</svg>\n";
}

inline std::string curve_svg(std::span<const CurvePoint> curve) {
  const int w = 600;
  const int h = 300;
  std::string s = detail::svg_open(w, h);
  int peak = 1;
  for (const auto& p : curve) peak = std::max(peak, p.count);
  std::string pts;
  for (const auto& p : curve) {
    pts += detail::fmt(20.0 + p.time * (w - 40.0)) + "," +
           detail::fmt(h - 20.0 - (h - 40.0) * p.count / peak) + " ";
  }
  s += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
  return s + "</svg>\n";
}

/// Region grid as translucent cells under the labeled embedding points.
inline std::string embedding_svg(std::span<const std::array<double, 2>> pts,
                                 std::span<const std::string> labels,
                                 std::span<const GridCell> cells, int resolution) {
  const int size = 600;
  std::string s = detail::svg_open(size, size);
  std::map<std::string, std::size_t> color;
  for (const auto& l : labels) color.emplace(l, color.size());
  double lo_x = 0, hi_x = 1, lo_y = 0, hi_y = 1;
  if (!cells.empty()) {
    lo_x = hi_x = cells[0].cx;
    lo_y = hi_y = cells[0].cy;
    for (const auto& c : cells) {
      lo_x = std::min(lo_x, c.cx);
      hi_x = std::max(hi_x, c.cx);
      lo_y = std::min(lo_y, c.cy);
      hi_y = std::max(hi_y, c.cy);
    }
  }
  const double sx = hi_x > lo_x ? (size - 20.0) / (hi_x - lo_x) : 1.0;
  const double sy = hi_y > lo_y ? (size - 20.0) / (hi_y - lo_y) : 1.0;
  const double cell = (size - 20.0) / std::max(1, resolution - 1);
  for (const auto& c : cells) {
    auto it = color.find(c.label);
    const char* fill = it == color.end() ? "#cccccc" : detail::palette(it->second);
    s += "<rect x=\"" + detail::fmt(10.0 + (c.cx - lo_x) * sx - cell / 2) + "\" y=\"" +
         detail::fmt(10.0 + (hi_y - c.cy) * sy - cell / 2) + "\" width=\"" + detail::fmt(cell) +
         "\" height=\"" + detail::fmt(cell) + "\" fill=\"" + fill + "\" fill-opacity=\"" +
         detail::fmt(0.35 * c.weight) + "\"/>\n";
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s += "<circle cx=\"" + detail::fmt(10.0 + (pts[i][0] - lo_x) * sx) + "\" cy=\"" +
         detail::fmt(10.0 + (hi_y - pts[i][1]) * sy) + "\" r=\"3\" fill=\"" +
         detail::palette(color[labels[i]]) + "\"/>\n";
  }
  return s + "</svg>\n";
}

}  // namespace shapecon
