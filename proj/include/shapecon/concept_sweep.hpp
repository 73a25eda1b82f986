#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shapecon/classifier.hpp"
#include "shapecon/concepts.hpp"
#include "shapecon/cross_validation.hpp"
#include "shapecon/topo.hpp"

namespace shapecon {

struct SweepGrid {
  std::vector<double> cut_times;
  std::vector<std::size_t> min_sizes;
};

/// Row i = cut_times[i], column j = min_sizes[j]. Undefined cells are NaN.
struct SweepResult {
  SweepGrid grid;
  std::vector<std::vector<double>> mean_purity;
  std::vector<std::vector<double>> mean_error;  // percent
  std::vector<std::vector<int>> concept_count;
};

/// Distinct filtration-graph times, excluding the last one (which would merge
/// everything into a single concept).
inline std::vector<double> default_cut_times(const Filtration& f, std::size_t max_points = 12) {
  std::vector<double> t;
  for (const auto& e : f.graph) t.push_back(e.time);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  if (!t.empty()) t.pop_back();
  if (t.size() > max_points) {
    std::vector<double> thin;
    for (std::size_t i = 0; i < max_points; ++i) {
      thin.push_back(t[i * (t.size() - 1) / (max_points - 1)]);
    }
    thin.erase(std::unique(thin.begin(), thin.end()), thin.end());
    t = std::move(thin);
  }
  return t;
}

/// Supervised grid search over cut time and minimum concept size: mean
/// concept purity and cross-validated classification error on responses.
/// A cell with no concepts, or with one concept holding every sample, is a
/// trivial extreme and stays NaN.
inline SweepResult supervised_sweep(const Filtration& f,
                                    std::span<const std::vector<double>> stimuli,
                                    std::span<const std::string> labels, const SweepGrid& grid,
                                    const SplitProtocol& protocol,
                                    const ClassifierOptions& classifier) {
  if (labels.size() != stimuli.size()) fail(ErrorCode::kShape, "sweep: label count mismatch");
  std::vector<std::optional<std::string>> opt_labels(labels.begin(), labels.end());
  SweepResult r;
  r.grid = grid;
  const double nan = std::nan("");
  for (double t : grid.cut_times) {
    std::vector<double> pur_row, err_row;
    std::vector<int> cnt_row;
    for (std::size_t min_size : grid.min_sizes) {
      const ConceptSet cs = extract_concepts(f, t, min_size, stimuli, opt_labels);
      cnt_row.push_back(static_cast<int>(cs.concepts.size()));
      const bool trivial = cs.concepts.empty() ||
                           (cs.concepts.size() == 1 && cs.concepts[0].size() == stimuli.size());
      if (trivial) {
        pur_row.push_back(nan);
        err_row.push_back(nan);
        continue;
      }
      pur_row.push_back(mean_purity(cs));
      std::vector<std::vector<double>> feats;
      feats.reserve(stimuli.size());
      for (const auto& s : stimuli) feats.push_back(responses(s, cs));
      err_row.push_back(cross_validate(feats, labels, protocol, classifier).mean());
    }
    r.mean_purity.push_back(std::move(pur_row));
    r.mean_error.push_back(std::move(err_row));
    r.concept_count.push_back(std::move(cnt_row));
  }
  return r;
}

}  // namespace shapecon
