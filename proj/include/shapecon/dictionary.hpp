#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "shapecon/descriptor.hpp"
#include "shapecon/error.hpp"
#include "shapecon/rng.hpp"

namespace shapecon {

/// Node of the divisive clustering tree. A node without children at a level
/// shallower than the dictionary depth is a leaf whose word stands in for all
/// deeper levels.
struct WordNode {
  int word_id = 0;
  int level = 0;  // root is level 0 and is not a word of any description level
  int parent = -1;
  int children[2] = {-1, -1};
  Descriptor centroid;
  // Training corpus indices that reached this node. Empty for loaded models,
  // which keep only the count.
  std::vector<std::size_t> members;
  std::size_t support = 0;

  bool is_leaf() const { return children[0] < 0; }
};

struct DictionaryOptions {
  int depth = 4;
  std::uint64_t seed = 0;
  int max_iter = 50;
  // Larger member sets use a seeded random subset to find the farthest pair.
  std::size_t farthest_pair_sample = 2000;
};

/// Hierarchical visual-word dictionary; level f holds at most 2^f words.
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(int depth, std::vector<WordNode> nodes) : depth_(depth), nodes_(std::move(nodes)) {
    for (auto& n : nodes_) {
      if (!n.members.empty()) n.support = n.members.size();
    }
    validate_structure();
  }

  bool trained() const { return !nodes_.empty(); }
  int depth() const { return depth_; }
  const std::vector<WordNode>& nodes() const { return nodes_; }
  const WordNode& node(int word_id) const { return nodes_.at(static_cast<std::size_t>(word_id)); }

  /// Word ids of description level f (1-based), left to right. Leaves above
  /// f are repeated.
  std::vector<int> level_words(int f) const {
    require_trained();
    if (f < 1 || f > depth_) fail(ErrorCode::kInvalidDepth, "level out of range");
    std::vector<int> out;
    collect(0, f, out);
    return out;
  }

  /// Word id per level 1..depth by tree descent (ties go to the lower id).
  std::vector<int> assign_words(const Descriptor& d) const {
    require_trained();
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(depth_));
    int cur = 0;
    for (int f = 1; f <= depth_; ++f) {
      const WordNode& n = nodes_[static_cast<std::size_t>(cur)];
      if (!n.is_leaf()) {
        const int a = n.children[0];
        const int b = n.children[1];
        const double da = squared_l2(d, nodes_[static_cast<std::size_t>(a)].centroid);
        const double db = squared_l2(d, nodes_[static_cast<std::size_t>(b)].centroid);
        if (da < db) {
          cur = a;
        } else if (db < da) {
          cur = b;
        } else {
          cur = std::min(a, b);
        }
      }
      out.push_back(cur);
    }
    return out;
  }

  /// True if `word` equals `ancestor` or lies in its subtree.
  bool descends_from(int word, int ancestor) const {
    for (int cur = word; cur >= 0; cur = nodes_.at(static_cast<std::size_t>(cur)).parent) {
      if (cur == ancestor) return true;
    }
    return false;
  }

 private:
  void require_trained() const {
    if (!trained()) fail(ErrorCode::kModelState, "dictionary is not trained");
  }

  void collect(int id, int f, std::vector<int>& out) const {
    const WordNode& n = nodes_[static_cast<std::size_t>(id)];
    if (n.level == f || n.is_leaf()) {
      out.push_back(id);
      return;
    }
    collect(n.children[0], f, out);
    collect(n.children[1], f, out);
  }

  void validate_structure() const {
    if (nodes_.empty()) return;
    if (depth_ < 1) fail(ErrorCode::kInvalidDepth, "dictionary depth must be >= 1");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const WordNode& n = nodes_[i];
      if (n.word_id != static_cast<int>(i)) fail(ErrorCode::kCorruptModel, "word ids must be dense");
      if ((n.children[0] < 0) != (n.children[1] < 0)) {
        fail(ErrorCode::kCorruptModel, "non-leaf word needs exactly two children");
      }
      for (int c : n.children) {
        if (c < 0) continue;
        if (c <= static_cast<int>(i) || c >= static_cast<int>(nodes_.size()) ||
            nodes_[static_cast<std::size_t>(c)].parent != static_cast<int>(i) ||
            nodes_[static_cast<std::size_t>(c)].level != n.level + 1 || n.level + 1 > depth_) {
          fail(ErrorCode::kCorruptModel, "inconsistent dictionary tree");
        }
      }
    }
  }

  int depth_ = 0;
  std::vector<WordNode> nodes_;
};

namespace detail {

inline Descriptor mean_descriptor(std::span<const Descriptor> corpus,
                                  std::span<const std::size_t> members) {
  Descriptor m;
  m.bins.fill(0.0);
  for (std::size_t i : members) {
    for (std::size_t k = 0; k < kDescriptorBins; ++k) m.bins[k] += corpus[i].bins[k];
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  for (double& b : m.bins) b *= inv;
  return m;
}

// Two-way Lloyd clustering seeded with the farthest pair. Returns false when
// the member set cannot be split (all identical, or a side emptied out).
inline bool split_two_means(std::span<const Descriptor> corpus,
                            std::span<const std::size_t> members,
                            const DictionaryOptions& opts, Rng& rng,
                            std::vector<std::size_t>& left, std::vector<std::size_t>& right,
                            Descriptor& c_left, Descriptor& c_right) {
  std::vector<std::size_t> cand(members.begin(), members.end());
  if (cand.size() > opts.farthest_pair_sample) {
    rng.shuffle(cand);
    cand.resize(opts.farthest_pair_sample);
    std::sort(cand.begin(), cand.end());
  }
  double best = -1.0;
  std::size_t a = cand[0];
  std::size_t b = cand[0];
  for (std::size_t i = 0; i < cand.size(); ++i) {
    for (std::size_t j = i + 1; j < cand.size(); ++j) {
      const double d = squared_l2(corpus[cand[i]], corpus[cand[j]]);
      if (d > best) {
        best = d;
        a = cand[i];
        b = cand[j];
      }
    }
  }
  if (!(best > 0.0)) return false;

  c_left = corpus[a];
  c_right = corpus[b];
  std::vector<char> side(members.size(), 0);
  for (int it = 0; it < std::max(1, opts.max_iter); ++it) {
    bool changed = it == 0;
    for (std::size_t m = 0; m < members.size(); ++m) {
      const Descriptor& d = corpus[members[m]];
      const char s = squared_l2(d, c_right) < squared_l2(d, c_left) ? 1 : 0;
      if (s != side[m]) changed = true;
      side[m] = s;
    }
    left.clear();
    right.clear();
    for (std::size_t m = 0; m < members.size(); ++m) {
      (side[m] ? right : left).push_back(members[m]);
    }
    if (left.empty() || right.empty()) return false;
    c_left = mean_descriptor(corpus, left);
    c_right = mean_descriptor(corpus, right);
    if (!changed) break;
  }
  return true;
}

}  // namespace detail

/// Divisive 2-means clustering of the corpus down to `opts.depth` levels.
inline Dictionary train_dictionary(std::span<const Descriptor> corpus,
                                   const DictionaryOptions& opts) {
  if (corpus.empty()) fail(ErrorCode::kEmptyCorpus, "train_dictionary: empty corpus");
  if (opts.depth < 1) fail(ErrorCode::kInvalidDepth, "train_dictionary: depth must be >= 1");
  if (corpus.size() < 2) {
    fail(ErrorCode::kEmptyCorpus, "train_dictionary: need at least two descriptors");
  }
  Rng rng(opts.seed);
  std::vector<WordNode> nodes;
  WordNode root;
  root.word_id = 0;
  root.level = 0;
  root.members.resize(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) root.members[i] = i;
  root.centroid = detail::mean_descriptor(corpus, root.members);
  nodes.push_back(std::move(root));

  // Breadth-first so word ids grow level by level.
  for (std::size_t cur = 0; cur < nodes.size(); ++cur) {
    if (nodes[cur].level >= opts.depth || nodes[cur].members.size() < 2) continue;
    std::vector<std::size_t> left, right;
    Descriptor cl, cr;
    if (!detail::split_two_means(corpus, nodes[cur].members, opts, rng, left, right, cl, cr)) {
      continue;
    }
    const int level = nodes[cur].level + 1;
    for (int s = 0; s < 2; ++s) {
      WordNode child;
      child.word_id = static_cast<int>(nodes.size());
      child.level = level;
      child.parent = static_cast<int>(cur);
      child.centroid = s == 0 ? cl : cr;
      child.members = s == 0 ? std::move(left) : std::move(right);
      nodes[cur].children[s] = child.word_id;
      nodes.push_back(std::move(child));
    }
  }

  // An unsplittable root is itself the single word of every level.
  return Dictionary(opts.depth, std::move(nodes));
}

}  // namespace shapecon
