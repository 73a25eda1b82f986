#pragma once

// Brute-force reference implementations used to check the library. They are
// deliberately naive and share no code with the implementations under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct WeightedEdge {
  int u;
  int v;
  double w;
};

/// Component label per vertex (smallest vertex id of its component), by
/// repeated relaxation over the edge list.
inline std::vector<int> components(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> label(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) label[static_cast<std::size_t>(i)] = i;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto [a, b] : edges) {
      int& la = label[static_cast<std::size_t>(a)];
      int& lb = label[static_cast<std::size_t>(b)];
      const int m = std::min(la, lb);
      if (la != m || lb != m) {
        la = lb = m;
        changed = true;
      }
    }
  }
  return label;
}

/// Partition as a canonical set of sorted member lists.
inline std::set<std::vector<int>> partition(const std::vector<int>& label) {
  std::map<int, std::vector<int>> g;
  for (std::size_t i = 0; i < label.size(); ++i) g[label[i]].push_back(static_cast<int>(i));
  std::set<std::vector<int>> out;
  for (auto& [k, v] : g) out.insert(v);
  return out;
}

inline int count_components(int n, const std::vector<std::pair<int, int>>& edges) {
  return static_cast<int>(partition(components(n, edges)).size());
}

/// Random tree: vertex i > 0 attaches to a uniformly chosen earlier vertex,
/// then ids are shuffled.
inline std::vector<std::pair<int, int>> random_tree(int n, std::mt19937_64& gen) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), gen);
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    int a = perm[static_cast<std::size_t>(i)];
    int b = perm[static_cast<std::size_t>(pick(gen))];
    edges.emplace_back(std::min(a, b), std::max(a, b));
  }
  return edges;
}

/// Sequential single-linkage replay with explicit label arrays: edges are
/// applied in (distance, u, v) order; the larger cluster keeps its identity,
/// ties go to the cluster containing the smaller vertex id. Returns, per
/// vertex, the index into `order` of the merge that ended its class, or -1.
inline std::vector<int> single_linkage_deaths(int n, const std::vector<WeightedEdge>& edges) {
  std::vector<WeightedEdge> order = edges;
  std::sort(order.begin(), order.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    if (a.w != b.w) return a.w < b.w;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });
  std::vector<int> cluster(static_cast<std::size_t>(n));   // cluster id per vertex
  std::vector<int> rep(static_cast<std::size_t>(n));       // class vertex per cluster id
  for (int i = 0; i < n; ++i) cluster[static_cast<std::size_t>(i)] = rep[static_cast<std::size_t>(i)] = i;
  std::vector<int> death(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int ca = cluster[static_cast<std::size_t>(order[k].u)];
    const int cb = cluster[static_cast<std::size_t>(order[k].v)];
    int size_a = 0, size_b = 0, min_a = n, min_b = n;
    for (int i = 0; i < n; ++i) {
      if (cluster[static_cast<std::size_t>(i)] == ca) ++size_a, min_a = std::min(min_a, i);
      if (cluster[static_cast<std::size_t>(i)] == cb) ++size_b, min_b = std::min(min_b, i);
    }
    const bool a_wins = size_a > size_b || (size_a == size_b && min_a < min_b);
    const int win = a_wins ? ca : cb;
    const int lose = a_wins ? cb : ca;
    death[static_cast<std::size_t>(rep[static_cast<std::size_t>(lose)])] = static_cast<int>(k);
    for (int& c : cluster) {
      if (c == lose) c = win;
    }
  }
  return death;
}

/// Base-2 JSD via natural-log KL divergences.
inline double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  double kp = 0.0, kq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = (p[i] + q[i]) / 2.0;
    if (p[i] > 0.0) kp += p[i] * (std::log(p[i]) - std::log(m));
    if (q[i] > 0.0) kq += q[i] * (std::log(q[i]) - std::log(m));
  }
  return (kp + kq) / (2.0 * std::log(2.0));
}

inline std::vector<double> random_distribution(std::size_t dim, std::mt19937_64& gen,
                                               double zero_prob = 0.2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(dim);
  double s = 0.0;
  for (double& x : p) {
    x = u(gen) < zero_prob ? 0.0 : u(gen);
    s += x;
  }
  if (s == 0.0) {
    p[0] = 1.0;
    s = 1.0;
  }
  for (double& x : p) x /= s;
  return p;
}

/// Max label share by counting every label against every other.
inline double purity(const std::vector<std::string>& labels) {
  std::size_t best = 0;
  for (const auto& a : labels) {
    std::size_t c = 0;
    for (const auto& b : labels) c += (a == b);
    best = std::max(best, c);
  }
  return static_cast<double>(best) / static_cast<double>(labels.size());
}

/// All-pairs unit geodesics by Floyd-Warshall.
inline std::vector<std::vector<double>> floyd(int n, const std::vector<std::pair<int, int>>& edges) {
  const double inf = 1e18;
  std::vector<std::vector<double>> d(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), inf));
  for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 0;
  for (auto [a, b] : edges) {
    d[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = 1;
    d[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = 1;
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        auto& dij = d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        dij = std::min(dij, d[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] +
                                d[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]);
      }
  return d;
}

}  // namespace oracle
