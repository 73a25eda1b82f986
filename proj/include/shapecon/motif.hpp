#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shapecon/descriptor.hpp"
#include "shapecon/dictionary.hpp"
#include "shapecon/error.hpp"
#include "shapecon/geometry.hpp"

namespace shapecon {

inline constexpr std::size_t kDefaultConstellationCap = 512;
inline constexpr double kDefaultSigma = 0.025;

// ---------------------------------------------------------------------------
// Segment constellations

/// Connected segment groups of one size, plus which groups are adjacent.
/// `sets` hold indices into the object's segment list, each sorted.
struct ConstellationLevel {
  std::vector<std::vector<int>> sets;
  std::vector<std::pair<std::size_t, std::size_t>> adjacency;
};

/// Bottom-up propagation of segment groups.
///
/// Level 1 has one group per segment, adjacent when the segments are. At
/// level l >= 2 two groups are adjacent when they share a segment. Unions of
/// adjacent level-l groups that have exactly l+1 members form level l+1, so
/// level l enumerates the connected l-segment sub-constellations. Stops once a
/// group spans every segment or no adjacent pairs remain.
inline std::vector<ConstellationLevel> propagate_constellations(
    std::size_t segment_count, std::span<const std::pair<int, int>> edges,
    std::size_t cap = kDefaultConstellationCap) {
  if (segment_count == 0) fail(ErrorCode::kEmptyObject, "object has no segments");
  std::vector<ConstellationLevel> levels(1);
  for (std::size_t s = 0; s < segment_count; ++s) levels[0].sets.push_back({static_cast<int>(s)});
  std::set<std::pair<std::size_t, std::size_t>> first;
  for (auto [a, b] : edges) {
    if (a == b) continue;
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= segment_count ||
        static_cast<std::size_t>(b) >= segment_count) {
      fail(ErrorCode::kPrecondition, "edge references unknown segment");
    }
    first.emplace(std::min(a, b), std::max(a, b));
  }
  levels[0].adjacency.assign(first.begin(), first.end());

  while (true) {
    const ConstellationLevel& cur = levels.back();
    const std::size_t size = cur.sets.front().size();
    if (size >= segment_count || cur.adjacency.empty()) break;
    std::set<std::vector<int>> next;
    for (auto [i, j] : cur.adjacency) {
      std::vector<int> u;
      std::set_union(cur.sets[i].begin(), cur.sets[i].end(), cur.sets[j].begin(),
                     cur.sets[j].end(), std::back_inserter(u));
      if (u.size() == size + 1) next.insert(std::move(u));
    }
    if (next.empty()) break;
    ConstellationLevel lvl;
    for (const auto& s : next) {
      if (lvl.sets.size() >= cap) break;
      lvl.sets.push_back(s);
    }
    for (std::size_t i = 0; i < lvl.sets.size(); ++i) {
      for (std::size_t j = i + 1; j < lvl.sets.size(); ++j) {
        std::vector<int> common;
        std::set_intersection(lvl.sets[i].begin(), lvl.sets[i].end(), lvl.sets[j].begin(),
                              lvl.sets[j].end(), std::back_inserter(common));
        if (!common.empty()) lvl.adjacency.emplace_back(i, j);
      }
    }
    levels.push_back(std::move(lvl));
  }
  return levels;
}

// ---------------------------------------------------------------------------
// Object features and graphs

/// Dictionary-independent description of one segmented object: one
/// descriptor per segment and per multi-segment constellation.
struct ObjectFeatures {
  std::string id;
  std::optional<std::string> label;
  std::vector<int> segment_ids;             // original ids, in segment order
  std::vector<std::pair<int, int>> edges;   // indices into segment_ids
  std::vector<ConstellationLevel> levels;   // levels[0] = single segments
  std::vector<std::vector<Descriptor>> descriptors;  // parallel to levels[l].sets
};

struct DescribeOptions {
  double radius = 0.0;  // <= 0: radius_factor * median point spacing
  double radius_factor = 4.0;
  std::size_t constellation_cap = kDefaultConstellationCap;
};

/// Computes segment and merged-constellation descriptors. Requires normals.
inline ObjectFeatures describe_object(const SegmentedObject& obj, const DescribeOptions& opts,
                                      std::string id = {}) {
  if (obj.segments.empty()) fail(ErrorCode::kEmptyObject, "object has no segments");
  if (!obj.cloud.has_normals()) fail(ErrorCode::kPrecondition, "describe_object: normals missing");
  double radius = opts.radius;
  if (!(radius > 0.0)) radius = opts.radius_factor * median_spacing(obj.cloud.points);
  if (!(radius > 0.0)) fail(ErrorCode::kIsolatedPoints, "describe_object: cannot derive radius");

  ObjectFeatures out;
  out.id = std::move(id);
  out.label = obj.category_label;
  std::map<int, int> index_of;
  for (const auto& s : obj.segments) {
    index_of[s.id] = static_cast<int>(out.segment_ids.size());
    out.segment_ids.push_back(s.id);
  }
  for (auto [a, b] : obj.adjacency) {
    auto ia = index_of.find(a);
    auto ib = index_of.find(b);
    if (ia == index_of.end() || ib == index_of.end()) {
      fail(ErrorCode::kPrecondition, "adjacency references unknown segment");
    }
    out.edges.emplace_back(ia->second, ib->second);
  }
  out.levels = propagate_constellations(obj.segments.size(), out.edges, opts.constellation_cap);
  for (const auto& lvl : out.levels) {
    std::vector<Descriptor> descs;
    for (const auto& set : lvl.sets) {
      if (set.size() == 1 && obj.segments[static_cast<std::size_t>(set[0])].descriptor) {
        descs.push_back(*obj.segments[static_cast<std::size_t>(set[0])].descriptor);
        continue;
      }
      std::vector<std::size_t> idx;
      for (int s : set) {
        const auto& pts = obj.segments[static_cast<std::size_t>(s)].point_indices;
        idx.insert(idx.end(), pts.begin(), pts.end());
      }
      std::sort(idx.begin(), idx.end());
      descs.push_back(fpfh(idx, obj.cloud, radius));
    }
    out.descriptors.push_back(std::move(descs));
  }
  return out;
}

struct GraphVertex {
  int segment_id = 0;
  Descriptor descriptor;
  std::vector<int> words;  // words[f - 1] = visual word at level f
};

/// Object as a segment graph whose vertices carry per-level visual words.
struct ObjectGraph {
  ObjectFeatures features;
  std::vector<GraphVertex> vertices;

  int depth() const { return vertices.empty() ? 0 : static_cast<int>(vertices[0].words.size()); }
};

inline ObjectGraph build_object_graph(ObjectFeatures features, const Dictionary& dict) {
  if (!dict.trained()) fail(ErrorCode::kModelState, "build_object_graph: dictionary not trained");
  if (features.segment_ids.empty()) fail(ErrorCode::kEmptyObject, "object has no segments");
  ObjectGraph g;
  for (std::size_t i = 0; i < features.segment_ids.size(); ++i) {
    const Descriptor& d = features.descriptors.at(0).at(i);
    g.vertices.push_back({features.segment_ids[i], d, dict.assign_words(d)});
  }
  g.features = std::move(features);
  return g;
}

inline ObjectGraph build_object_graph(const SegmentedObject& obj, const Dictionary& dict,
                                      const DescribeOptions& opts = {}) {
  if (!dict.trained()) fail(ErrorCode::kModelState, "build_object_graph: dictionary not trained");
  return build_object_graph(describe_object(obj, opts), dict);
}

// ---------------------------------------------------------------------------
// Decomposition

/// One observed segment constellation of an object.
struct InstanceMotif {
  std::vector<int> segment_ids;  // original segment ids, sorted
  int level = 1;
  Descriptor descriptor;
  std::vector<int> words;  // sorted word multiset at the decomposition level
  std::optional<int> matched_vertex;
};

struct InstanceLevel {
  std::vector<InstanceMotif> instances;
  std::vector<std::pair<std::size_t, std::size_t>> adjacency;
};

/// Decomposes an object graph with the words of dictionary level f.
inline std::vector<InstanceLevel> decompose(const ObjectGraph& g, int f) {
  if (g.vertices.empty()) fail(ErrorCode::kEmptyObject, "decompose: empty object");
  if (f < 1 || f > g.depth()) fail(ErrorCode::kModelState, "decompose: no words at level " + std::to_string(f));
  std::vector<InstanceLevel> out;
  for (std::size_t l = 0; l < g.features.levels.size(); ++l) {
    const ConstellationLevel& lvl = g.features.levels[l];
    InstanceLevel il;
    il.adjacency = lvl.adjacency;
    for (std::size_t k = 0; k < lvl.sets.size(); ++k) {
      InstanceMotif m;
      m.level = static_cast<int>(l + 1);
      m.descriptor = g.features.descriptors.at(l).at(k);
      for (int s : lvl.sets[k]) {
        m.segment_ids.push_back(g.vertices[static_cast<std::size_t>(s)].segment_id);
        m.words.push_back(g.vertices[static_cast<std::size_t>(s)].words[static_cast<std::size_t>(f - 1)]);
      }
      std::sort(m.segment_ids.begin(), m.segment_ids.end());
      std::sort(m.words.begin(), m.words.end());
      il.instances.push_back(std::move(m));
    }
    out.push_back(std::move(il));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hierarchy ensemble

struct MotifVertex {
  int id = 0;
  int level = 1;
  std::vector<int> motif;  // sorted word multiset, |motif| == level
  std::vector<Descriptor> prototypes;
};

/// Motif hierarchy over the words of one dictionary level. Vertex ids follow
/// creation order, which is also the stimuli block order.
class MotifHierarchy {
 public:
  MotifHierarchy() = default;
  explicit MotifHierarchy(int dictionary_level) : dictionary_level_(dictionary_level) {}

  int dictionary_level() const { return dictionary_level_; }
  const std::vector<MotifVertex>& vertices() const { return vertices_; }
  const std::set<std::pair<int, int>>& edges() const { return edges_; }
  std::size_t size() const { return vertices_.size(); }

  std::optional<int> find(int level, const std::vector<int>& motif) const {
    auto it = index_.find({level, motif});
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Encodes one object: find-or-create a vertex per instance, store its
  /// descriptor as a prototype, and record observed adjacency as edges.
  void train(const ObjectGraph& g) {
    const auto levels = decompose(g, dictionary_level_);
    for (const auto& lvl : levels) {
      std::vector<int> ids;
      ids.reserve(lvl.instances.size());
      for (const auto& inst : lvl.instances) {
        const int v = find_or_create(inst.level, inst.words);
        vertices_[static_cast<std::size_t>(v)].prototypes.push_back(inst.descriptor);
        ids.push_back(v);
      }
      for (auto [i, j] : lvl.adjacency) {
        edges_.emplace(std::min(ids[i], ids[j]), std::max(ids[i], ids[j]));
      }
    }
  }

  /// Restores a persisted vertex; ids must arrive in order.
  void add_vertex(MotifVertex v) {
    if (v.id != static_cast<int>(vertices_.size())) fail(ErrorCode::kCorruptModel, "vertex ids must be dense");
    if (v.motif.size() != static_cast<std::size_t>(v.level)) fail(ErrorCode::kCorruptModel, "motif size != level");
    if (!std::is_sorted(v.motif.begin(), v.motif.end())) fail(ErrorCode::kCorruptModel, "motif not sorted");
    if (!index_.emplace(std::make_pair(v.level, v.motif), v.id).second) {
      fail(ErrorCode::kCorruptModel, "duplicate motif");
    }
    vertices_.push_back(std::move(v));
  }

  void add_edge(int a, int b) {
    const int n = static_cast<int>(vertices_.size());
    if (a < 0 || b < 0 || a >= n || b >= n) fail(ErrorCode::kCorruptModel, "edge out of range");
    edges_.emplace(std::min(a, b), std::max(a, b));
  }

 private:
  int find_or_create(int level, const std::vector<int>& motif) {
    auto [it, inserted] = index_.emplace(std::make_pair(level, motif), static_cast<int>(vertices_.size()));
    if (inserted) vertices_.push_back({it->second, level, motif, {}});
    return it->second;
  }

  int dictionary_level_ = 1;
  std::vector<MotifVertex> vertices_;
  std::set<std::pair<int, int>> edges_;
  std::map<std::pair<int, std::vector<int>>, int> index_;
};

struct Ensemble {
  std::vector<MotifHierarchy> hierarchies;  // hierarchies[i] uses level i + 1

  std::size_t dimension() const {
    std::size_t d = 0;
    for (const auto& h : hierarchies) d += h.size();
    return d;
  }
};

/// Trains one hierarchy per dictionary level, label-agnostic.
inline Ensemble train_ensemble(std::span<const ObjectGraph> graphs, const Dictionary& dict) {
  if (!dict.trained()) fail(ErrorCode::kModelState, "train_ensemble: dictionary not trained");
  if (graphs.empty()) fail(ErrorCode::kEmptyCorpus, "train_ensemble: no training objects");
  Ensemble e;
  for (int f = 1; f <= dict.depth(); ++f) {
    MotifHierarchy h(f);
    for (const auto& g : graphs) h.train(g);
    e.hierarchies.push_back(std::move(h));
  }
  return e;
}

// ---------------------------------------------------------------------------
// Stimuli

/// Prototype-averaged Gaussian kernel on JSD; 0 when not activated.
inline double stimulus(const MotifVertex& v, const Descriptor& q, bool activated,
                       double sigma = kDefaultSigma) {
  if (!(sigma > 0.0)) fail(ErrorCode::kInvalidParameter, "sigma must be positive");
  if (!activated) return 0.0;
  if (v.prototypes.empty()) fail(ErrorCode::kCorruptModel, "activated vertex has no prototypes");
  const double denom = -2.0 * sigma * sigma;
  double acc = 0.0;
  for (const auto& t : v.prototypes) {
    const double d = jsd(t, q);
    acc += std::exp(d * d / denom);
  }
  return acc / static_cast<double>(v.prototypes.size());
}

struct StimuliVector {
  std::vector<std::vector<double>> blocks;  // one block per hierarchy

  std::vector<double> concatenated() const {
    std::vector<double> out;
    for (const auto& b : blocks) out.insert(out.end(), b.begin(), b.end());
    return out;
  }
};

/// Propagates an object through every hierarchy; each vertex responds with
/// the strongest stimulus among the instances that activate it.
inline StimuliVector stimuli_vector(const ObjectGraph& g, const Ensemble& e,
                                    double sigma = kDefaultSigma) {
  if (e.hierarchies.empty()) fail(ErrorCode::kModelState, "stimuli_vector: empty ensemble");
  if (g.depth() != static_cast<int>(e.hierarchies.size())) {
    fail(ErrorCode::kModelState, "stimuli_vector: object has " + std::to_string(g.depth()) +
                                     " word levels, ensemble has " +
                                     std::to_string(e.hierarchies.size()) + " hierarchies");
  }
  StimuliVector out;
  for (const auto& h : e.hierarchies) {
    std::vector<double> block(h.size(), 0.0);
    for (const auto& lvl : decompose(g, h.dictionary_level())) {
      for (const auto& inst : lvl.instances) {
        const auto v = h.find(inst.level, inst.words);
        if (!v) continue;
        const double s = stimulus(h.vertices()[static_cast<std::size_t>(*v)], inst.descriptor, true, sigma);
        double& slot = block[static_cast<std::size_t>(*v)];
        slot = std::max(slot, s);
      }
    }
    out.blocks.push_back(std::move(block));
  }
  return out;
}

}  // namespace shapecon
