#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "shapecon/descriptor.hpp"
#include "shapecon/error.hpp"
#include "shapecon/rng.hpp"

namespace shapecon {

using Vec3 = Eigen::Vector3d;

/// Points in meters, in the sensor frame (sensor at the origin).
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;       // empty, or one unit normal per point
  std::vector<double> curvature;   // empty, or surface variation per point
  std::vector<int> segment_ids;    // empty, or one id per point

  std::size_t size() const { return points.size(); }
  bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }
  bool has_segment_ids() const {
    return !segment_ids.empty() && segment_ids.size() == points.size();
  }
};

struct Segment {
  int id = 0;
  std::vector<std::size_t> point_indices;
  std::optional<Descriptor> descriptor;
};

using SegmentEdge = std::pair<int, int>;

struct SegmentedObject {
  PointCloud cloud;
  std::vector<Segment> segments;
  std::vector<SegmentEdge> adjacency;  // (lo, hi) pairs, sorted, no self-loops
  std::optional<std::string> category_label;

  const Segment* find_segment(int id) const {
    for (const auto& s : segments) {
      if (s.id == id) return &s;
    }
    return nullptr;
  }
};

/// Throws precondition if adjacency references unknown segments, contains
/// self-loops, or segment index sets overlap.
inline void validate(const SegmentedObject& obj) {
  std::set<int> ids;
  std::vector<char> used(obj.cloud.size(), 0);
  for (const auto& s : obj.segments) {
    if (s.point_indices.empty()) fail(ErrorCode::kPrecondition, "empty segment");
    if (!ids.insert(s.id).second) fail(ErrorCode::kPrecondition, "duplicate segment id");
    for (std::size_t i : s.point_indices) {
      if (i >= obj.cloud.size()) fail(ErrorCode::kPrecondition, "segment index out of range");
      if (used[i]) fail(ErrorCode::kPrecondition, "segments overlap");
      used[i] = 1;
    }
  }
  for (const auto& [a, b] : obj.adjacency) {
    if (a == b) fail(ErrorCode::kPrecondition, "adjacency self-loop");
    if (!ids.count(a) || !ids.count(b)) {
      fail(ErrorCode::kPrecondition, "adjacency references unknown segment");
    }
  }
}

// ---------------------------------------------------------------------------
// Neighborhood search

/// Uniform hash grid for fixed-radius queries. Cell size equals the largest
/// radius the grid will be asked for.
class SpatialGrid {
 public:
  SpatialGrid(std::span<const Vec3> points, double cell)
      : points_(points), cell_(cell) {
    if (!(cell > 0.0)) fail(ErrorCode::kInvalidParameter, "grid cell must be positive");
    for (std::size_t i = 0; i < points.size(); ++i) {
      cells_[key(coord(points[i]))].push_back(i);
    }
  }

  /// Indices within radius of points[i], excluding i, in ascending order.
  std::vector<std::size_t> neighbors(std::size_t i, double radius) const {
    std::vector<std::size_t> out;
    const Vec3& p = points_[i];
    const double r2 = radius * radius;
    const int reach = static_cast<int>(std::ceil(radius / cell_));
    const auto c = coord(p);
    for (int dx = -reach; dx <= reach; ++dx) {
      for (int dy = -reach; dy <= reach; ++dy) {
        for (int dz = -reach; dz <= reach; ++dz) {
          auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
          if (it == cells_.end()) continue;
          for (std::size_t j : it->second) {
            if (j != i && (points_[j] - p).squaredNorm() <= r2) out.push_back(j);
          }
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::array<std::int64_t, 3> coord(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }
  static std::uint64_t key(const std::array<std::int64_t, 3>& c) {
    constexpr std::int64_t kOffset = 1 << 20;
    constexpr std::uint64_t kMask = (1u << 21) - 1;
    return ((static_cast<std::uint64_t>(c[0] + kOffset) & kMask) << 42) |
           ((static_cast<std::uint64_t>(c[1] + kOffset) & kMask) << 21) |
           (static_cast<std::uint64_t>(c[2] + kOffset) & kMask);
  }

  std::span<const Vec3> points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

/// Median nearest-neighbor distance; 0 for fewer than two points.
inline double median_spacing(std::span<const Vec3> points) {
  if (points.size() < 2) return 0.0;
  std::vector<double> nn(points.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double d = (points[i] - points[j]).squaredNorm();
      nn[i] = std::min(nn[i], d);
      nn[j] = std::min(nn[j], d);
    }
  }
  auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
  std::nth_element(nn.begin(), mid, nn.end());
  return std::sqrt(*mid);
}

/// Undirected adjacency between differently labeled points within dist.
inline std::vector<SegmentEdge> segment_adjacency(const PointCloud& cloud,
                                                  std::span<const int> labels,
                                                  double dist) {
  std::set<SegmentEdge> edges;
  SpatialGrid grid(cloud.points, dist);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t j : grid.neighbors(i, dist)) {
      if (j < i || labels[i] == labels[j]) continue;
      edges.emplace(std::min(labels[i], labels[j]), std::max(labels[i], labels[j]));
    }
  }
  return {edges.begin(), edges.end()};
}

/// Builds segments (ordered by id) from per-point labels.
inline std::vector<Segment> segments_from_labels(std::span<const int> labels) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  std::vector<Segment> out;
  out.reserve(groups.size());
  for (auto& [id, idx] : groups) out.push_back(Segment{id, std::move(idx), std::nullopt});
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic scans

enum class PrimitiveKind { kBox, kSphere, kCylinder };

/// Axis-aligned solid in the object frame. dims: box = full extents (x,y,z);
/// sphere = (radius, -, -); cylinder = (radius, height, -) with axis along z.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::kBox;
  Vec3 dims = Vec3::Zero();
  Vec3 center = Vec3::Zero();
};

struct ShapeSpec {
  std::vector<Primitive> parts;
  std::string label;

  static ShapeSpec box(double sx, double sy, double sz) {
    return {{{PrimitiveKind::kBox, {sx, sy, sz}, Vec3::Zero()}}, "box"};
  }
  static ShapeSpec sphere(double r) {
    return {{{PrimitiveKind::kSphere, {r, 0, 0}, Vec3::Zero()}}, "sphere"};
  }
  /// Closed cylinder: curved wall plus two planar caps ("can").
  static ShapeSpec cylinder(double r, double h) {
    return {{{PrimitiveKind::kCylinder, {r, h, 0}, Vec3::Zero()}}, "can"};
  }
  /// Sphere cluster: body, head and two ears.
  static ShapeSpec teddy(double r) {
    ShapeSpec s;
    s.label = "teddy";
    s.parts.push_back({PrimitiveKind::kSphere, {r, 0, 0}, Vec3::Zero()});
    s.parts.push_back({PrimitiveKind::kSphere, {0.65 * r, 0, 0}, {0, 0, 1.35 * r}});
    s.parts.push_back({PrimitiveKind::kSphere, {0.3 * r, 0, 0}, {0.45 * r, 0, 1.85 * r}});
    s.parts.push_back({PrimitiveKind::kSphere, {0.3 * r, 0, 0}, {-0.45 * r, 0, 1.85 * r}});
    return s;
  }
};

/// Sensor placement relative to the object center (object frame, radians).
struct Viewpoint {
  double distance = 1.0;
  double azimuth = std::numbers::pi / 4;
  double elevation = 0.6;
};

struct ScanOptions {
  double density = 40000.0;  // samples per square meter of surface
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  double adjacency_factor = 2.5;  // adjacency distance in units of 1/sqrt(density)
};

namespace detail {

inline bool primitive_valid(const Primitive& p) {
  switch (p.kind) {
    case PrimitiveKind::kBox: return p.dims.x() > 0 && p.dims.y() > 0 && p.dims.z() > 0;
    case PrimitiveKind::kSphere: return p.dims.x() > 0;
    case PrimitiveKind::kCylinder: return p.dims.x() > 0 && p.dims.y() > 0;
  }
  return false;
}

// Parameter interval [t_in, t_out] where origin + t * dir lies inside the solid.
inline std::optional<std::pair<double, double>> solid_interval(const Primitive& prim,
                                                               const Vec3& origin,
                                                               const Vec3& dir) {
  const Vec3 o = origin - prim.center;
  double t_in = -std::numeric_limits<double>::infinity();
  double t_out = std::numeric_limits<double>::infinity();
  auto clip_slab = [&](double o_k, double d_k, double half) {
    if (std::abs(d_k) < 1e-15) return std::abs(o_k) <= half;
    double a = (-half - o_k) / d_k;
    double b = (half - o_k) / d_k;
    if (a > b) std::swap(a, b);
    t_in = std::max(t_in, a);
    t_out = std::min(t_out, b);
    return t_in <= t_out;
  };
  auto clip_quadratic = [&](double a, double b, double c) {
    // a t^2 + b t + c <= 0
    if (a < 1e-30) return c <= 0.0;
    const double disc = b * b - 4 * a * c;
    if (disc < 0) return false;
    const double s = std::sqrt(disc);
    t_in = std::max(t_in, (-b - s) / (2 * a));
    t_out = std::min(t_out, (-b + s) / (2 * a));
    return t_in <= t_out;
  };
  bool hit = false;
  switch (prim.kind) {
    case PrimitiveKind::kBox:
      hit = clip_slab(o.x(), dir.x(), prim.dims.x() / 2) &&
            clip_slab(o.y(), dir.y(), prim.dims.y() / 2) &&
            clip_slab(o.z(), dir.z(), prim.dims.z() / 2);
      break;
    case PrimitiveKind::kSphere: {
      const double r = prim.dims.x();
      hit = clip_quadratic(dir.squaredNorm(), 2 * o.dot(dir), o.squaredNorm() - r * r);
      break;
    }
    case PrimitiveKind::kCylinder: {
      const double r = prim.dims.x();
      const double a = dir.x() * dir.x() + dir.y() * dir.y();
      const double b = 2 * (o.x() * dir.x() + o.y() * dir.y());
      const double c = o.x() * o.x() + o.y() * o.y() - r * r;
      hit = clip_quadratic(a, b, c) && clip_slab(o.z(), dir.z(), prim.dims.y() / 2);
      break;
    }
  }
  if (!hit) return std::nullopt;
  return std::make_pair(t_in, t_out);
}

struct SurfaceSample {
  Vec3 point;
  Vec3 normal;
  int surface;
};

inline std::size_t sample_count(double area, double density, Rng& rng) {
  const double expected = area * density;
  return static_cast<std::size_t>(std::floor(expected + rng.uniform()));
}

inline std::vector<SurfaceSample> sample_primitive(const Primitive& prim, double density,
                                                   Rng& rng) {
  std::vector<SurfaceSample> out;
  const Vec3& c = prim.center;
  switch (prim.kind) {
    case PrimitiveKind::kBox: {
      const Vec3 h = prim.dims / 2;
      for (int axis = 0; axis < 3; ++axis) {
        const int u = (axis + 1) % 3;
        const int v = (axis + 2) % 3;
        const double area = prim.dims[u] * prim.dims[v];
        for (int side = 0; side < 2; ++side) {
          const double sign = side == 0 ? 1.0 : -1.0;
          const std::size_t n = sample_count(area, density, rng);
          for (std::size_t k = 0; k < n; ++k) {
            Vec3 p = c;
            p[axis] += sign * h[axis];
            p[u] += rng.uniform(-h[u], h[u]);
            p[v] += rng.uniform(-h[v], h[v]);
            Vec3 nrm = Vec3::Zero();
            nrm[axis] = sign;
            out.push_back({p, nrm, 2 * axis + side});
          }
        }
      }
      break;
    }
    case PrimitiveKind::kSphere: {
      const double r = prim.dims.x();
      const std::size_t n = sample_count(4 * std::numbers::pi * r * r, density, rng);
      for (std::size_t k = 0; k < n; ++k) {
        Vec3 d;
        do {
          d = {rng.normal(), rng.normal(), rng.normal()};
        } while (d.squaredNorm() < 1e-12);
        d.normalize();
        out.push_back({c + r * d, d, 0});
      }
      break;
    }
    case PrimitiveKind::kCylinder: {
      const double r = prim.dims.x();
      const double hh = prim.dims.y() / 2;
      const std::size_t n_wall =
          sample_count(2 * std::numbers::pi * r * prim.dims.y(), density, rng);
      for (std::size_t k = 0; k < n_wall; ++k) {
        const double a = rng.uniform(0, 2 * std::numbers::pi);
        const Vec3 d(std::cos(a), std::sin(a), 0);
        out.push_back({c + Vec3(r * d.x(), r * d.y(), rng.uniform(-hh, hh)), d, 0});
      }
      for (int side = 0; side < 2; ++side) {
        const double sign = side == 0 ? 1.0 : -1.0;
        const std::size_t n = sample_count(std::numbers::pi * r * r, density, rng);
        for (std::size_t k = 0; k < n; ++k) {
          const double rad = r * std::sqrt(rng.uniform());
          const double a = rng.uniform(0, 2 * std::numbers::pi);
          out.push_back({c + Vec3(rad * std::cos(a), rad * std::sin(a), sign * hh),
                         Vec3(0, 0, sign), 1 + side});
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace detail

/// Simulated single-viewpoint 2.5D scan with per-surface ground-truth segments.
///
/// Points are sampled uniformly over every primitive surface, back-face culled
/// and occlusion tested against the other parts, then expressed in a sensor
/// frame whose origin is the sensor and whose z axis points at the object.
inline SegmentedObject generate_synthetic_scan(const ShapeSpec& shape, const Viewpoint& view,
                                               const ScanOptions& opts) {
  if (shape.parts.empty()) fail(ErrorCode::kInvalidShape, "shape has no parts");
  for (const auto& p : shape.parts) {
    if (!detail::primitive_valid(p)) {
      fail(ErrorCode::kInvalidShape, "shape dimension must be positive");
    }
  }
  if (!(opts.noise_sigma >= 0.0)) fail(ErrorCode::kInvalidParameter, "noise_sigma < 0");
  if (!(opts.density > 0.0)) fail(ErrorCode::kInvalidParameter, "density must be positive");
  if (!(view.distance > 0.0)) fail(ErrorCode::kInvalidParameter, "view distance must be positive");

  Rng rng(opts.seed);
  const Vec3 dir(std::cos(view.elevation) * std::cos(view.azimuth),
                 std::cos(view.elevation) * std::sin(view.azimuth),
                 std::sin(view.elevation));
  const Vec3 sensor = view.distance * dir;

  const Vec3 forward = -dir;
  Vec3 up(0, 0, 1);
  if (std::abs(forward.dot(up)) > 0.99) up = Vec3(0, 1, 0);
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);
  Eigen::Matrix3d rot;
  rot.row(0) = right.transpose();
  rot.row(1) = down.transpose();
  rot.row(2) = forward.transpose();

  // (part, surface) -> compact segment id, in order of first visible sample.
  std::map<std::pair<std::size_t, int>, int> surface_ids;
  SegmentedObject obj;
  for (std::size_t pi = 0; pi < shape.parts.size(); ++pi) {
    for (const auto& s : detail::sample_primitive(shape.parts[pi], opts.density, rng)) {
      const Vec3 to_sensor = sensor - s.point;
      if (s.normal.dot(to_sensor) <= 0.0) continue;
      bool occluded = false;
      for (std::size_t qi = 0; qi < shape.parts.size() && !occluded; ++qi) {
        if (qi == pi) continue;
        const auto iv = detail::solid_interval(shape.parts[qi], sensor, s.point - sensor);
        occluded = iv && iv->first < 1.0 - 1e-9 && iv->second > 1e-9;
      }
      if (occluded) continue;
      const auto key = std::make_pair(pi, s.surface);
      auto it = surface_ids.find(key);
      if (it == surface_ids.end()) {
        it = surface_ids.emplace(key, static_cast<int>(surface_ids.size())).first;
      }
      Vec3 p = rot * (s.point - sensor);
      if (opts.noise_sigma > 0.0) {
        p += opts.noise_sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
      }
      obj.cloud.points.push_back(p);
      obj.cloud.segment_ids.push_back(it->second);
    }
  }
  obj.segments = segments_from_labels(obj.cloud.segment_ids);
  const double adj_dist = opts.adjacency_factor / std::sqrt(opts.density);
  obj.adjacency = segment_adjacency(obj.cloud, obj.cloud.segment_ids, adj_dist);
  if (!shape.label.empty()) obj.category_label = shape.label;
  return obj;
}

// ---------------------------------------------------------------------------
// Normals

/// Per-point normals from the k-NN covariance (k includes the point itself),
/// oriented toward the sensor origin. Also fills surface variation
/// lambda_min / (lambda_0 + lambda_1 + lambda_2).
inline PointCloud estimate_normals(PointCloud cloud, std::size_t k = 16) {
  if (k < 3) fail(ErrorCode::kInvalidParameter, "estimate_normals: k must be >= 3");
  const std::size_t n = cloud.size();
  if (n < k) {
    fail(ErrorCode::kInsufficientPoints, "estimate_normals: " + std::to_string(n) +
                                             " points for k=" + std::to_string(k));
  }
  cloud.normals.assign(n, Vec3::Zero());
  cloud.curvature.assign(n, 0.0);
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      dist[j] = {(cloud.points[j] - cloud.points[i]).squaredNorm(), j};
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     dist.end());
    Vec3 mean = Vec3::Zero();
    for (std::size_t m = 0; m < k; ++m) mean += cloud.points[dist[m].second];
    mean /= static_cast<double>(k);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t m = 0; m < k; ++m) {
      const Vec3 d = cloud.points[dist[m].second] - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(k);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Vec3 normal = eig.eigenvectors().col(0);
    if (!normal.allFinite() || normal.norm() < 0.5) normal = Vec3(0, 0, 1);
    normal.normalize();
    if (normal.dot(-cloud.points[i]) < 0.0) normal = -normal;
    cloud.normals[i] = normal;
    const Vec3 ev = eig.eigenvalues().cwiseMax(0.0);
    const double total = ev.sum();
    cloud.curvature[i] = total > 0.0 ? ev[0] / total : 0.0;
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// Region growing

struct RegionGrowOptions {
  double angle_deg = 15.0;
  double dist = 0.012;
  // Points above this surface variation join a region but do not extend it.
  double curvature_max = 0.06;
  // Smaller regions are merged into their most-connected neighbor.
  std::size_t min_segment_size = 50;
};

/// Smoothness-constrained region growing over a cloud with normals.
inline SegmentedObject region_grow_segment(const PointCloud& cloud,
                                           const RegionGrowOptions& opts) {
  if (!cloud.has_normals()) fail(ErrorCode::kPrecondition, "region_grow_segment: normals missing");
  if (!(opts.dist > 0.0)) fail(ErrorCode::kInvalidParameter, "dist_thresh must be positive");
  const std::size_t n = cloud.size();
  const double cos_thresh = std::cos(opts.angle_deg * std::numbers::pi / 180.0);
  const bool has_curv = cloud.curvature.size() == n;

  SpatialGrid grid(cloud.points, opts.dist);
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) nbrs[i] = grid.neighbors(i, opts.dist);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (has_curv) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cloud.curvature[a] < cloud.curvature[b];
    });
  }
  auto smooth = [&](std::size_t i) { return !has_curv || cloud.curvature[i] <= opts.curvature_max; };

  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t seed : order) {
    if (label[seed] >= 0) continue;
    const int id = next++;
    label[seed] = id;
    std::vector<std::size_t> queue{seed};
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t p = queue[head];
      if (p != seed && !smooth(p)) continue;
      for (std::size_t q : nbrs[p]) {
        if (label[q] >= 0) continue;
        if (std::abs(cloud.normals[p].dot(cloud.normals[q])) < cos_thresh) continue;
        label[q] = id;
        queue.push_back(q);
      }
    }
  }

  // Fold undersized regions into the neighbor sharing the most point pairs.
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<int, std::size_t> sizes;
    for (int l : label) ++sizes[l];
    // Smallest first; ids break ties.
    std::vector<std::pair<std::size_t, int>> by_size;
    for (auto [l, s] : sizes) by_size.emplace_back(s, l);
    std::sort(by_size.begin(), by_size.end());
    for (auto [size, l] : by_size) {
      if (size >= opts.min_segment_size) break;
      std::map<int, std::size_t> contact;
      for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != l) continue;
        for (std::size_t j : nbrs[i]) {
          if (label[j] != l) ++contact[label[j]];
        }
      }
      if (contact.empty()) {
        // Stranded region: join whichever region holds the nearest outside point.
        double best = std::numeric_limits<double>::infinity();
        int nearest = l;
        for (std::size_t i = 0; i < n; ++i) {
          if (label[i] != l) continue;
          for (std::size_t j = 0; j < n; ++j) {
            if (label[j] == l) continue;
            const double d = (cloud.points[i] - cloud.points[j]).squaredNorm();
            if (d < best) {
              best = d;
              nearest = label[j];
            }
          }
        }
        if (nearest == l) continue;
        contact[nearest] = 1;
      }
      int target = contact.begin()->first;
      for (auto [t, c] : contact) {
        if (c > contact[target]) target = t;
      }
      for (int& x : label) {
        if (x == l) x = target;
      }
      changed = true;
      break;
    }
  }

  // Compact ids in order of lowest point index.
  std::map<int, int> remap;
  for (int& l : label) {
    auto it = remap.find(l);
    if (it == remap.end()) it = remap.emplace(l, static_cast<int>(remap.size())).first;
    l = it->second;
  }

  SegmentedObject obj;
  obj.cloud = cloud;
  obj.cloud.segment_ids = label;
  obj.segments = segments_from_labels(label);
  obj.adjacency = segment_adjacency(obj.cloud, label, opts.dist);
  return obj;
}

inline SegmentedObject region_grow_segment(const PointCloud& cloud, double angle_thresh_deg,
                                           double dist_thresh) {
  RegionGrowOptions opts;
  opts.angle_deg = angle_thresh_deg;
  opts.dist = dist_thresh;
  return region_grow_segment(cloud, opts);
}

// ---------------------------------------------------------------------------
// FPFH-style descriptor

struct PairFeatures {
  double theta;  // [-pi, pi]
  double alpha;  // [-1, 1]
  double phi;    // [-1, 1]
};

/// Darboux-frame angular features of an oriented point pair. Returns nullopt
/// for coincident points or degenerate frames.
inline std::optional<PairFeatures> pair_features(const Vec3& p1, const Vec3& n1,
                                                 const Vec3& p2, const Vec3& n2) {
  Vec3 dp = p2 - p1;
  const double dist = dp.norm();
  if (dist <= 0.0) return std::nullopt;
  Vec3 ns = n1;
  Vec3 nt = n2;
  const double a1 = n1.dot(dp) / dist;
  const double a2 = n2.dot(dp) / dist;
  double phi = a1;
  // The source is the point whose normal makes the smaller angle with the line.
  if (std::acos(std::min(1.0, std::abs(a1))) > std::acos(std::min(1.0, std::abs(a2)))) {
    std::swap(ns, nt);
    dp = -dp;
    phi = -a2;
  }
  Vec3 v = dp.cross(ns);
  const double vn = v.norm();
  if (vn <= 0.0) return std::nullopt;
  v /= vn;
  const Vec3 w = ns.cross(v);
  return PairFeatures{std::atan2(w.dot(nt), ns.dot(nt)), v.dot(nt), phi};
}

namespace detail {

// Linear split of unit mass between the two nearest bin centers; the end
// bins keep everything beyond their centers.
inline void soft_bin(double* hist, double x, double lo, double hi) {
  const double t = (x - lo) / (hi - lo) * static_cast<double>(kFeatureBins) - 0.5;
  const double last = static_cast<double>(kFeatureBins) - 1.0;
  if (!(t > 0.0)) {
    hist[0] += 1.0;
    return;
  }
  if (t >= last) {
    hist[kFeatureBins - 1] += 1.0;
    return;
  }
  const auto b = static_cast<std::size_t>(std::floor(t));
  const double f = t - static_cast<double>(b);
  hist[b] += 1.0 - f;
  hist[b + 1] += f;
}

}  // namespace detail

/// Simplified FPFH over a point subset: per point, pair features against its
/// radius neighbors (within the subset) are soft-binned and normalized; point
/// histograms are averaged with uniform weight, smoothed and L1-normalized.
inline Descriptor fpfh(std::span<const std::size_t> indices, const PointCloud& cloud,
                       double radius) {
  if (indices.empty()) fail(ErrorCode::kPrecondition, "fpfh: empty segment");
  if (!(radius > 0.0)) fail(ErrorCode::kInvalidParameter, "fpfh: radius must be positive");
  if (!cloud.has_normals()) fail(ErrorCode::kPrecondition, "fpfh: normals missing");

  // Centroid-relative positions snapped to 1 nm, so a translated cloud gives
  // bit-identical neighbor sets and pair features.
  Vec3 center = Vec3::Zero();
  for (std::size_t i : indices) center += cloud.points[i];
  center /= static_cast<double>(indices.size());
  std::vector<Vec3> pts;
  pts.reserve(indices.size());
  for (std::size_t i : indices) {
    pts.push_back(((cloud.points[i] - center) * 1e9).array().round().matrix() * 1e-9);
  }
  SpatialGrid grid(pts, radius);

  std::array<double, kDescriptorBins> acc{};
  std::size_t contributing = 0;
  std::array<double, kDescriptorBins> hist{};
  for (std::size_t a = 0; a < pts.size(); ++a) {
    hist.fill(0.0);
    std::size_t pairs = 0;
    const Vec3& na = cloud.normals[indices[a]];
    for (std::size_t b : grid.neighbors(a, radius)) {
      const auto f = pair_features(pts[a], na, pts[b], cloud.normals[indices[b]]);
      if (!f) continue;
      detail::soft_bin(hist.data(), f->theta, -std::numbers::pi, std::numbers::pi);
      detail::soft_bin(hist.data() + kFeatureBins, f->alpha, -1.0, 1.0);
      detail::soft_bin(hist.data() + 2 * kFeatureBins, f->phi, -1.0, 1.0);
      ++pairs;
    }
    if (pairs == 0) continue;
    const double inv = 1.0 / static_cast<double>(pairs);
    for (std::size_t k = 0; k < kDescriptorBins; ++k) acc[k] += hist[k] * inv;
    ++contributing;
  }
  if (contributing == 0) {
    fail(ErrorCode::kIsolatedPoints, "fpfh: no neighbor pairs within radius");
  }
  for (double& x : acc) x /= static_cast<double>(contributing);
  return Descriptor::from_counts(acc);
}

inline Descriptor fpfh(const Segment& segment, const PointCloud& cloud, double radius) {
  return fpfh(segment.point_indices, cloud, radius);
}

}  // namespace shapecon
