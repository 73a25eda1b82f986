#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "shapecon/error.hpp"
#include "shapecon/topo.hpp"

namespace shapecon {

inline constexpr double kRankEpsilon = 1e-6;
inline constexpr double kShrinkage = 1e-3;

/// Which filtration-graph edges a cut removes. kDropLater keeps edges formed
/// at or before the cut time; kDropEarlier keeps those formed at or after it.
enum class CutRule { kDropLater, kDropEarlier };

/// Connected components of the filtration graph after a cut, as sorted member
/// vertex ids. Components are ordered by descending size, then smallest id.
inline std::vector<std::vector<int>> cut_components(const Filtration& f, double t_star,
                                                    CutRule rule = CutRule::kDropLater) {
  const auto n = static_cast<std::size_t>(f.vertex_count);
  DisjointSets ds(n);
  for (const auto& e : f.graph) {
    const bool keep = rule == CutRule::kDropLater ? e.time <= t_star : e.time >= t_star;
    if (!keep) continue;
    const std::size_t a = ds.find(static_cast<std::size_t>(e.u));
    const std::size_t b = ds.find(static_cast<std::size_t>(e.v));
    if (a != b) ds.attach(a, b);
  }
  std::map<std::size_t, std::vector<int>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[ds.find(i)].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.front() < b.front();
  });
  return out;
}

struct Concept {
  int id = 0;
  std::vector<int> members;  // vertex (sample) ids, sorted
  std::vector<std::vector<double>> prototypes;
  std::vector<std::optional<std::string>> labels;  // parallel to prototypes
  double formation_time = 0.0;

  std::size_t size() const { return members.size(); }
};

/// Diagonal covariance pooled over training stimuli, shrunk toward the mean
/// variance.
struct CovarianceModel {
  std::vector<double> variances;
  double shrinkage = kShrinkage;

  static CovarianceModel identity(std::size_t dim) {
    return {std::vector<double>(dim, 1.0), 0.0};
  }

  static CovarianceModel fit(std::span<const std::vector<double>> samples,
                             double shrinkage = kShrinkage) {
    if (samples.empty()) fail(ErrorCode::kTooFewSamples, "covariance: no samples");
    const std::size_t dim = samples[0].size();
    std::vector<double> mean(dim, 0.0);
    for (const auto& s : samples) {
      if (s.size() != dim) fail(ErrorCode::kShape, "covariance: dimension mismatch");
      for (std::size_t k = 0; k < dim; ++k) mean[k] += s[k];
    }
    for (double& m : mean) m /= static_cast<double>(samples.size());
    std::vector<double> var(dim, 0.0);
    for (const auto& s : samples) {
      for (std::size_t k = 0; k < dim; ++k) var[k] += (s[k] - mean[k]) * (s[k] - mean[k]);
    }
    double mean_var = 0.0;
    for (double& v : var) {
      v /= static_cast<double>(samples.size());
      mean_var += v;
    }
    if (dim > 0) mean_var /= static_cast<double>(dim);
    for (double& v : var) {
      v = (1.0 - shrinkage) * v + shrinkage * mean_var;
      // All samples identical: fall back to unit variance.
      if (!(v > 0.0)) v = 1.0;
    }
    return {std::move(var), shrinkage};
  }

  double distance(std::span<const double> a, std::span<const double> b) const {
    if (a.size() != variances.size() || b.size() != variances.size()) {
      fail(ErrorCode::kShape, "mahalanobis: dimension mismatch");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double d = a[k] - b[k];
      acc += d * d / variances[k];
    }
    return std::sqrt(acc);
  }
};

struct ConceptSet {
  std::vector<Concept> concepts;
  double cut_time = 0.0;
  CovarianceModel covariance;
};

/// Cuts the filtration graph at t_star and keeps components with at least
/// min_size members as concepts. Prototypes are the members' stimuli;
/// `labels` may be empty.
inline ConceptSet extract_concepts(const Filtration& f, double t_star, std::size_t min_size,
                                   std::span<const std::vector<double>> stimuli,
                                   std::span<const std::optional<std::string>> labels = {},
                                   CutRule rule = CutRule::kDropLater) {
  if (!(t_star >= 0.0 && t_star <= 1.0)) fail(ErrorCode::kInvalidParameter, "t_star must be in [0,1]");
  if (min_size < 1) fail(ErrorCode::kInvalidParameter, "min_size must be >= 1");
  if (stimuli.size() != static_cast<std::size_t>(f.vertex_count)) {
    fail(ErrorCode::kShape, "extract_concepts: stimuli count does not match the filtration");
  }
  if (!labels.empty() && labels.size() != stimuli.size()) {
    fail(ErrorCode::kShape, "extract_concepts: label count does not match the stimuli");
  }
  ConceptSet cs;
  cs.cut_time = t_star;
  cs.covariance = CovarianceModel::fit(stimuli);

  std::vector<double> member_time(stimuli.size(), 0.0);
  const auto comps = cut_components(f, t_star, rule);
  std::vector<int> comp_of(stimuli.size());
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (int m : comps[c]) comp_of[static_cast<std::size_t>(m)] = static_cast<int>(c);
  }
  std::vector<double> formation(comps.size(), 0.0);
  for (const auto& e : f.graph) {
    const bool keep = rule == CutRule::kDropLater ? e.time <= t_star : e.time >= t_star;
    if (!keep) continue;
    auto& ft = formation[static_cast<std::size_t>(comp_of[static_cast<std::size_t>(e.u)])];
    ft = std::max(ft, e.time);
  }
  for (std::size_t c = 0; c < comps.size(); ++c) {
    if (comps[c].size() < min_size) continue;
    Concept con;
    con.id = static_cast<int>(cs.concepts.size());
    con.members = comps[c];
    con.formation_time = formation[c];
    for (int m : con.members) {
      con.prototypes.push_back(stimuli[static_cast<std::size_t>(m)]);
      con.labels.push_back(labels.empty() ? std::nullopt : labels[static_cast<std::size_t>(m)]);
    }
    cs.concepts.push_back(std::move(con));
  }
  return cs;
}

/// Largest share of any single label among the concept prototypes.
inline double purity(const Concept& c, const std::set<std::string>& label_universe = {}) {
  if (c.labels.empty()) fail(ErrorCode::kMissingLabel, "purity: concept has no prototypes");
  std::map<std::string, std::size_t> counts;
  for (const auto& l : c.labels) {
    if (!l) fail(ErrorCode::kMissingLabel, "purity: unlabeled prototype in concept " + std::to_string(c.id));
    if (!label_universe.empty() && !label_universe.count(*l)) {
      fail(ErrorCode::kMissingLabel, "purity: label '" + *l + "' outside the label set");
    }
    ++counts[*l];
  }
  std::size_t best = 0;
  for (const auto& [l, n] : counts) best = std::max(best, n);
  return static_cast<double>(best) / static_cast<double>(c.labels.size());
}

inline double rank_score(std::size_t size, double purity_value) {
  return static_cast<double>(size) / (1.0 - purity_value + kRankEpsilon);
}

inline double rank_score(const Concept& c) { return rank_score(c.size(), purity(c)); }

/// Mean Mahalanobis distance to the concept prototypes (smaller is closer).
inline double concept_response(std::span<const double> gamma, const Concept& c,
                               const CovarianceModel& cov) {
  if (c.prototypes.empty()) fail(ErrorCode::kModelState, "concept has no prototypes");
  double acc = 0.0;
  for (const auto& p : c.prototypes) acc += cov.distance(gamma, p);
  return acc / static_cast<double>(c.prototypes.size());
}

/// One response per concept, in concept id order.
inline std::vector<double> responses(std::span<const double> gamma, const ConceptSet& cs) {
  std::vector<double> out;
  out.reserve(cs.concepts.size());
  for (const auto& c : cs.concepts) out.push_back(concept_response(gamma, c, cs.covariance));
  return out;
}

inline double mean_purity(const ConceptSet& cs) {
  if (cs.concepts.empty()) return std::nan("");
  double acc = 0.0;
  for (const auto& c : cs.concepts) acc += purity(c);
  return acc / static_cast<double>(cs.concepts.size());
}

}  // namespace shapecon
