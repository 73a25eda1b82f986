#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "shapecon/divergence.hpp"
#include "shapecon/error.hpp"

namespace shapecon {

struct SpaceEdge {
  int u = 0;  // u < v
  int v = 0;
  double weight = 0.0;    // JSD between the endpoint stimuli
  double distance = 0.0;  // inverted, scaled heat; assigned by geodesic_heats
};

/// Spanning tree over stimuli vectors.
struct TopoSpace {
  int vertex_count = 0;
  std::vector<SpaceEdge> edges;
  std::vector<double> raw_heats;  // mean unit-weight geodesic distance per vertex
  std::vector<double> heats;      // scaled to [0,1] then inverted
};

// ---------------------------------------------------------------------------
// Union-find

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1), min_id_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
    std::iota(min_id_.begin(), min_id_.end(), 0);
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  std::size_t size(std::size_t root) const { return size_[root]; }
  std::size_t min_id(std::size_t root) const { return min_id_[root]; }

  /// Attaches `dying` under `survivor` (both roots).
  void attach(std::size_t survivor, std::size_t dying) {
    parent_[dying] = survivor;
    size_[survivor] += size_[dying];
    min_id_[survivor] = std::min(min_id_[survivor], min_id_[dying]);
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::vector<std::size_t> min_id_;
};

// ---------------------------------------------------------------------------
// Space construction

/// Minimum spanning tree (Kruskal) of the complete JSD graph over
/// L1-normalized stimuli. Ties are broken by (min id, max id).
inline TopoSpace build_space(std::span<const std::vector<double>> stimuli) {
  const std::size_t n = stimuli.size();
  if (n < 2) fail(ErrorCode::kTooFewSamples, "build_space: need at least 2 stimuli vectors");
  std::vector<std::vector<double>> dists;
  dists.reserve(n);
  for (const auto& s : stimuli) {
    if (s.size() != stimuli[0].size()) fail(ErrorCode::kShape, "build_space: dimension mismatch");
    dists.push_back(normalized_distribution(s));
  }
  std::vector<SpaceEdge> all;
  all.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      all.push_back({static_cast<int>(i), static_cast<int>(j), jsd(dists[i], dists[j]), 0.0});
    }
  }
  std::sort(all.begin(), all.end(), [](const SpaceEdge& a, const SpaceEdge& b) {
    return std::tie(a.weight, a.u, a.v) < std::tie(b.weight, b.u, b.v);
  });
  TopoSpace space;
  space.vertex_count = static_cast<int>(n);
  DisjointSets ds(n);
  for (const auto& e : all) {
    const std::size_t a = ds.find(static_cast<std::size_t>(e.u));
    const std::size_t b = ds.find(static_cast<std::size_t>(e.v));
    if (a == b) continue;
    ds.attach(a, b);
    space.edges.push_back(e);
    if (space.edges.size() == n - 1) break;
  }
  return space;
}

/// All-pairs unit-weight geodesic distances by BFS from every vertex. Throws
/// invalid-space if the edge set does not connect all vertices.
inline std::vector<std::vector<int>> unit_geodesics(int vertex_count,
                                                    std::span<const SpaceEdge> edges) {
  const auto n = static_cast<std::size_t>(vertex_count);
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= vertex_count || e.v >= vertex_count) {
      fail(ErrorCode::kInvalidSpace, "edge references unknown vertex");
    }
    adj[static_cast<std::size_t>(e.u)].push_back(static_cast<std::size_t>(e.v));
    adj[static_cast<std::size_t>(e.v)].push_back(static_cast<std::size_t>(e.u));
  }
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  for (std::size_t s = 0; s < n; ++s) {
    std::queue<std::size_t> q;
    dist[s][s] = 0;
    q.push(s);
    while (!q.empty()) {
      const std::size_t x = q.front();
      q.pop();
      for (std::size_t y : adj[x]) {
        if (dist[s][y] >= 0) continue;
        dist[s][y] = dist[s][x] + 1;
        q.push(y);
      }
    }
    for (std::size_t t = 0; t < n; ++t) {
      if (dist[s][t] < 0) fail(ErrorCode::kInvalidSpace, "space is disconnected");
    }
  }
  return dist;
}

/// Replaces edge distances by inverted geodesic heat.
///
/// Vertex heat is the mean unit-weight geodesic distance to all vertices
/// (including itself). Heats are min-max scaled to [0,1] and inverted, and an
/// edge takes the mean inverted heat of its endpoints.
inline TopoSpace geodesic_heats(TopoSpace space) {
  if (space.vertex_count < 1) fail(ErrorCode::kInvalidSpace, "empty space");
  if (space.edges.size() != static_cast<std::size_t>(space.vertex_count - 1)) {
    fail(ErrorCode::kInvalidSpace, "space is not a spanning tree");
  }
  const auto n = static_cast<std::size_t>(space.vertex_count);
  const auto geo = unit_geodesics(space.vertex_count, space.edges);
  space.raw_heats.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += geo[i][j];
    space.raw_heats[i] = sum / static_cast<double>(n);
  }
  const auto [lo_it, hi_it] = std::minmax_element(space.raw_heats.begin(), space.raw_heats.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  space.heats.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    // With no spread every vertex is equally central: scaled 0, inverted 1.
    const double scaled = range > 0.0 ? (space.raw_heats[i] - lo) / range : 0.0;
    space.heats[i] = 1.0 - scaled;
  }
  for (auto& e : space.edges) {
    e.distance = 0.5 * (space.heats[static_cast<std::size_t>(e.u)] +
                        space.heats[static_cast<std::size_t>(e.v)]);
  }
  return space;
}

// ---------------------------------------------------------------------------
// Filtration

struct AnnexationEvent {
  int step = 0;
  int survivor = 0;  // class vertex of the surviving component
  int dying = 0;     // class vertex whose bar ends
  int edge = 0;      // index into TopoSpace::edges
};

struct Bar {
  int vertex = 0;
  double birth = 0.0;
  double death = std::numeric_limits<double>::infinity();
};

struct FiltrationEdge {
  int u = 0;
  int v = 0;
  double time = 0.0;  // normalized time of the step the edge entered
};

struct Filtration {
  int vertex_count = 0;
  std::vector<double> epsilons;
  std::vector<AnnexationEvent> events;
  std::vector<Bar> barcode;  // one bar per vertex, by vertex id
  std::vector<FiltrationEdge> graph;
  std::vector<int> annexation_counts;  // per step

  double time_of_step(std::size_t i) const {
    const double span = epsilons.back() - epsilons.front();
    if (!(span > 0.0)) return 0.0;
    return (epsilons[i] - epsilons.front()) / span;
  }

  /// Number of components after all steps up to and including `step`.
  int components_after(int step) const {
    int merged = 0;
    for (int s = 0; s <= step && s < static_cast<int>(annexation_counts.size()); ++s) {
      merged += annexation_counts[static_cast<std::size_t>(s)];
    }
    return vertex_count - merged;
  }
};

inline constexpr int kDefaultMaxSteps = 1000;

/// Radii for a filtration over the given edge distances: start and step at the
/// smallest positive distance, end at or beyond the largest, stretching the
/// step uniformly when more than max_steps radii would be needed.
inline std::vector<double> filtration_radii(std::span<const double> distances, int max_steps) {
  if (max_steps < 2) fail(ErrorCode::kInvalidParameter, "max_steps must be >= 2");
  double min_pos = std::numeric_limits<double>::infinity();
  double max_d = 0.0;
  for (double d : distances) {
    if (!(d >= 0.0) || !std::isfinite(d)) fail(ErrorCode::kInvalidSpace, "edge distance must be finite and >= 0");
    if (d > 0.0) min_pos = std::min(min_pos, d);
    max_d = std::max(max_d, d);
  }
  if (!std::isfinite(min_pos)) return {0.0};
  const double eps0 = min_pos;
  double step = eps0;
  auto j = static_cast<long long>(std::ceil((max_d - eps0) / step));
  // Guard against a ratio like 2.0000000001 caused by rounding.
  if (j > 0 && eps0 + static_cast<double>(j - 1) * step >= max_d) --j;
  if (j + 1 > max_steps) {
    j = max_steps - 1;
    step = (max_d - eps0) / static_cast<double>(j);
  }
  std::vector<double> radii(static_cast<std::size_t>(j + 1));
  for (long long i = 0; i <= j; ++i) radii[static_cast<std::size_t>(i)] = eps0 + static_cast<double>(i) * step;
  radii.back() = std::max(radii.back(), max_d);
  return radii;
}

/// H0 persistence over the tree: each edge enters at the first radius that
/// covers its distance; merges follow (distance, u, v) order within a step.
/// The larger component survives, ties go to the one holding the smaller
/// vertex id.
inline Filtration filtrate(const TopoSpace& space, int max_steps = kDefaultMaxSteps) {
  const auto n = static_cast<std::size_t>(space.vertex_count);
  if (n < 1) fail(ErrorCode::kInvalidSpace, "empty space");
  if (space.edges.size() != n - 1) fail(ErrorCode::kInvalidSpace, "space is not a spanning tree");

  std::vector<double> dist;
  for (const auto& e : space.edges) dist.push_back(e.distance);
  Filtration f;
  f.vertex_count = space.vertex_count;
  f.epsilons = filtration_radii(dist, max_steps);
  f.annexation_counts.assign(f.epsilons.size(), 0);
  f.barcode.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.barcode[i] = {static_cast<int>(i), 0.0,
                                                       std::numeric_limits<double>::infinity()};

  std::vector<std::size_t> order(space.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = space.edges[a];
    const auto& y = space.edges[b];
    return std::tie(x.distance, x.u, x.v) < std::tie(y.distance, y.u, y.v);
  });

  DisjointSets ds(n);
  std::vector<int> class_vertex(n);
  std::iota(class_vertex.begin(), class_vertex.end(), 0);
  for (std::size_t idx : order) {
    const auto& e = space.edges[idx];
    const auto it = std::lower_bound(f.epsilons.begin(), f.epsilons.end(), e.distance);
    const std::size_t step = it == f.epsilons.end()
                                 ? f.epsilons.size() - 1
                                 : static_cast<std::size_t>(it - f.epsilons.begin());
    const double time = f.time_of_step(step);
    std::size_t a = ds.find(static_cast<std::size_t>(e.u));
    std::size_t b = ds.find(static_cast<std::size_t>(e.v));
    if (a == b) fail(ErrorCode::kInvalidSpace, "space contains a cycle");
    const bool a_wins = ds.size(a) > ds.size(b) ||
                        (ds.size(a) == ds.size(b) && ds.min_id(a) < ds.min_id(b));
    if (!a_wins) std::swap(a, b);
    f.events.push_back({static_cast<int>(step), class_vertex[a], class_vertex[b], static_cast<int>(idx)});
    f.barcode[static_cast<std::size_t>(class_vertex[b])].death = time;
    ds.attach(a, b);
    ++f.annexation_counts[step];
    f.graph.push_back({e.u, e.v, time});
  }
  return f;
}

struct CurvePoint {
  double time = 0.0;
  int count = 0;
};

inline std::vector<CurvePoint> annexation_curve(const Filtration& f) {
  if (f.epsilons.empty()) fail(ErrorCode::kModelState, "annexation_curve: empty filtration");
  std::vector<CurvePoint> out;
  for (std::size_t i = 0; i < f.annexation_counts.size(); ++i) {
    out.push_back({f.time_of_step(i), f.annexation_counts[i]});
  }
  return out;
}

/// Normalized time of the step with the most annexations (earliest on ties).
inline double epsilon_max(const Filtration& f) {
  if (f.epsilons.empty()) fail(ErrorCode::kModelState, "epsilon_max: empty filtration");
  std::size_t best = 0;
  for (std::size_t i = 1; i < f.annexation_counts.size(); ++i) {
    if (f.annexation_counts[i] > f.annexation_counts[best]) best = i;
  }
  return f.time_of_step(best);
}

}  // namespace shapecon
