#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "shapecon/classifier.hpp"
#include "shapecon/error.hpp"
#include "shapecon/rng.hpp"

namespace shapecon {

struct SplitProtocol {
  double train_ratio = 0.75;
  int repetitions = 5;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-category random split; each category keeps at least one sample on
/// either side.
inline Split stratified_split(std::span<const std::string> labels, double train_ratio, Rng& rng) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Split s;
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 2) {
      fail(ErrorCode::kStratification, "category '" + label + "' has fewer than 2 samples");
    }
    rng.shuffle(idx);
    auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(idx.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.insert(s.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

struct CrossValidationResult {
  std::vector<std::string> classes;
  std::vector<double> mean_error_percent;  // per class, in [0, 100]

  double mean() const {
    if (mean_error_percent.empty()) return std::nan("");
    double acc = 0.0;
    for (double e : mean_error_percent) acc += e;
    return acc / static_cast<double>(mean_error_percent.size());
  }
};

/// Repeated stratified splits. `fit_predict(train, test)` returns one
/// predicted label per test index.
template <typename FitPredict>
CrossValidationResult cross_validate(std::span<const std::string> labels,
                                     const SplitProtocol& protocol, FitPredict&& fit_predict) {
  if (!(protocol.train_ratio > 0.0 && protocol.train_ratio < 1.0) || protocol.repetitions < 1) {
    fail(ErrorCode::kInvalidParameter, "cross_validate: bad protocol");
  }
  CrossValidationResult r;
  r.classes.assign(labels.begin(), labels.end());
  std::sort(r.classes.begin(), r.classes.end());
  r.classes.erase(std::unique(r.classes.begin(), r.classes.end()), r.classes.end());
  r.mean_error_percent.assign(r.classes.size(), 0.0);
  Rng rng(protocol.seed);
  for (int rep = 0; rep < protocol.repetitions; ++rep) {
    const Split s = stratified_split(labels, protocol.train_ratio, rng);
    const std::vector<std::string> pred = fit_predict(s.train, s.test);
    if (pred.size() != s.test.size()) fail(ErrorCode::kShape, "cross_validate: prediction count mismatch");
    std::vector<std::size_t> wrong(r.classes.size(), 0), total(r.classes.size(), 0);
    for (std::size_t k = 0; k < s.test.size(); ++k) {
      const std::string& truth = labels[s.test[k]];
      const auto c = static_cast<std::size_t>(
          std::lower_bound(r.classes.begin(), r.classes.end(), truth) - r.classes.begin());
      ++total[c];
      if (pred[k] != truth) ++wrong[c];
    }
    for (std::size_t c = 0; c < r.classes.size(); ++c) {
      r.mean_error_percent[c] += 100.0 * static_cast<double>(wrong[c]) / static_cast<double>(total[c]);
    }
  }
  for (double& e : r.mean_error_percent) e /= static_cast<double>(protocol.repetitions);
  return r;
}

/// Cross-validated linear classifier on feature rows.
inline CrossValidationResult cross_validate(std::span<const std::vector<double>> features,
                                            std::span<const std::string> labels,
                                            const SplitProtocol& protocol,
                                            const ClassifierOptions& opts) {
  if (features.size() != labels.size()) fail(ErrorCode::kShape, "cross_validate: size mismatch");
  return cross_validate(labels, protocol, [&](const auto& train, const auto& test) {
    std::vector<std::vector<double>> x;
    std::vector<std::string> y;
    for (std::size_t i : train) {
      x.push_back(features[i]);
      y.push_back(labels[i]);
    }
    const LinearClassifier m = train_classifier(x, y, opts);
    std::vector<std::string> out;
    for (std::size_t i : test) out.push_back(m.predict(features[i]));
    return out;
  });
}

}  // namespace shapecon
