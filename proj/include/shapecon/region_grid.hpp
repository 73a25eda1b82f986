#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "shapecon/error.hpp"

namespace shapecon {

struct GridCell {
  double cx = 0.0;
  double cy = 0.0;
  std::string label;
  double weight = 0.0;  // share of the k nearest instances carrying `label`
};

struct RegionGridOptions {
  double k_fraction = 0.05;
  int resolution = 100;
  double padding = 0.05;  // bounding-box padding per side, relative to extent
};

/// Majority label of the k nearest instances at a query point.
inline GridCell majority_at(double cx, double cy, std::span<const std::array<double, 2>> pts,
                            std::span<const std::string> labels, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dx = pts[i][0] - cx;
    const double dy = pts[i][1] - cy;
    d[i] = {dx * dx + dy * dy, i};
  }
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::map<std::string, std::size_t> counts;
  for (std::size_t m = 0; m < k; ++m) ++counts[labels[d[m].second]];
  GridCell cell{cx, cy, {}, 0.0};
  std::size_t best = 0;
  for (const auto& [l, c] : counts) {
    if (c > best) {
      best = c;
      cell.label = l;
    }
  }
  cell.weight = static_cast<double>(best) / static_cast<double>(k);
  return cell;
}

/// Uniform grid over the padded bounding box; cells are row-major with x
/// varying fastest.
inline std::vector<GridCell> region_grid(std::span<const std::array<double, 2>> pts,
                                         std::span<const std::string> labels,
                                         const RegionGridOptions& opts = {}) {
  if (pts.size() != labels.size()) fail(ErrorCode::kShape, "region_grid: label count mismatch");
  if (pts.empty()) fail(ErrorCode::kInvalidParameter, "region_grid: no points");
  if (!(opts.k_fraction > 0.0 && opts.k_fraction <= 1.0)) {
    fail(ErrorCode::kInvalidParameter, "region_grid: k_fraction must be in (0,1]");
  }
  if (opts.resolution < 2) fail(ErrorCode::kInvalidParameter, "region_grid: resolution must be >= 2");
  const auto k = static_cast<std::size_t>(std::ceil(opts.k_fraction * static_cast<double>(pts.size())));
  if (k > pts.size() || k == 0) fail(ErrorCode::kInvalidParameter, "region_grid: k exceeds N");

  double x0 = pts[0][0], x1 = pts[0][0], y0 = pts[0][1], y1 = pts[0][1];
  for (const auto& p : pts) {
    x0 = std::min(x0, p[0]);
    x1 = std::max(x1, p[0]);
    y0 = std::min(y0, p[1]);
    y1 = std::max(y1, p[1]);
  }
  const double px = std::max(x1 - x0, 1e-12) * opts.padding;
  const double py = std::max(y1 - y0, 1e-12) * opts.padding;
  x0 -= px;
  x1 += px;
  y0 -= py;
  y1 += py;
  const int r = opts.resolution;
  const double wx = (x1 - x0) / r;
  const double wy = (y1 - y0) / r;
  std::vector<GridCell> cells;
  cells.reserve(static_cast<std::size_t>(r) * static_cast<std::size_t>(r));
  for (int iy = 0; iy < r; ++iy) {
    for (int ix = 0; ix < r; ++ix) {
      cells.push_back(majority_at(x0 + (ix + 0.5) * wx, y0 + (iy + 0.5) * wy, pts, labels, k));
    }
  }
  return cells;
}

}  // namespace shapecon
