#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "shapecon/error.hpp"
#include "shapecon/rng.hpp"

namespace shapecon {

struct ClassifierOptions {
  int epochs = 200;
  double lambda = 1e-3;  // l2 regularization
  std::uint64_t seed = 0;
  bool standardize = true;
};

/// One-vs-rest linear max-margin model over standardized features.
class LinearClassifier {
 public:
  LinearClassifier() = default;

  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::vector<double>>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }
  std::size_t dimension() const { return mean_.size(); }

  std::vector<double> scores(std::span<const double> x) const {
    if (x.size() != dimension()) fail(ErrorCode::kShape, "classifier: dimension mismatch");
    std::vector<double> z(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) z[k] = (x[k] - mean_[k]) / scale_[k];
    std::vector<double> out(classes_.size());
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      out[c] = bias_[c] + std::inner_product(z.begin(), z.end(), weights_[c].begin(), 0.0);
    }
    return out;
  }

  /// Highest-scoring class; ties go to the lexicographically smaller label.
  const std::string& predict(std::span<const double> x) const {
    const auto s = scores(x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < s.size(); ++c) {
      if (s[c] > s[best]) best = c;
    }
    return classes_[best];
  }

  friend LinearClassifier train_classifier(std::span<const std::vector<double>> x,
                                           std::span<const std::string> y,
                                           const ClassifierOptions& opts);

 private:
  std::vector<std::string> classes_;  // sorted
  std::vector<std::vector<double>> weights_;
  std::vector<double> bias_;
  std::vector<double> mean_;
  std::vector<double> scale_;
};

/// Pegasos-style stochastic subgradient descent on the l2-regularized hinge
/// loss, one binary problem per class. The bias is handled as a constant
/// feature.
inline LinearClassifier train_classifier(std::span<const std::vector<double>> x,
                                         std::span<const std::string> y,
                                         const ClassifierOptions& opts) {
  if (x.size() != y.size()) fail(ErrorCode::kShape, "train_classifier: sample/label count mismatch");
  if (x.empty()) fail(ErrorCode::kInvalidTask, "train_classifier: no samples");
  if (!(opts.lambda > 0.0) || opts.epochs < 1) fail(ErrorCode::kInvalidParameter, "bad classifier options");
  const std::size_t dim = x[0].size();
  for (const auto& row : x) {
    if (row.size() != dim) fail(ErrorCode::kShape, "train_classifier: inconsistent dimensions");
  }
  LinearClassifier m;
  m.classes_.assign(y.begin(), y.end());
  std::sort(m.classes_.begin(), m.classes_.end());
  m.classes_.erase(std::unique(m.classes_.begin(), m.classes_.end()), m.classes_.end());
  if (m.classes_.size() < 2) fail(ErrorCode::kInvalidTask, "train_classifier: need at least two classes");

  m.mean_.assign(dim, 0.0);
  m.scale_.assign(dim, 1.0);
  if (opts.standardize) {
    for (const auto& row : x) {
      for (std::size_t k = 0; k < dim; ++k) m.mean_[k] += row[k];
    }
    for (double& v : m.mean_) v /= static_cast<double>(x.size());
    std::vector<double> var(dim, 0.0);
    for (const auto& row : x) {
      for (std::size_t k = 0; k < dim; ++k) var[k] += (row[k] - m.mean_[k]) * (row[k] - m.mean_[k]);
    }
    for (std::size_t k = 0; k < dim; ++k) {
      const double sd = std::sqrt(var[k] / static_cast<double>(x.size()));
      m.scale_[k] = sd > 0.0 ? sd : 1.0;
    }
  }
  std::vector<std::vector<double>> z(x.size(), std::vector<double>(dim + 1, 1.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t k = 0; k < dim; ++k) z[i][k] = (x[i][k] - m.mean_[k]) / m.scale_[k];
  }

  const double radius = 1.0 / std::sqrt(opts.lambda);
  for (std::size_t c = 0; c < m.classes_.size(); ++c) {
    Rng rng(derive_seed(opts.seed, m.classes_[c]));
    std::vector<double> w(dim + 1, 0.0);
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t t = 0;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t i : order) {
        ++t;
        const double eta = 1.0 / (opts.lambda * static_cast<double>(t));
        const double target = y[i] == m.classes_[c] ? 1.0 : -1.0;
        const double margin = target * std::inner_product(w.begin(), w.end(), z[i].begin(), 0.0);
        const double shrink = 1.0 - eta * opts.lambda;
        for (double& v : w) v *= shrink;
        if (margin < 1.0) {
          for (std::size_t k = 0; k <= dim; ++k) w[k] += eta * target * z[i][k];
        }
        const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        if (norm > radius) {
          for (double& v : w) v *= radius / norm;
        }
      }
    }
    m.bias_.push_back(w[dim]);
    w.pop_back();
    m.weights_.push_back(std::move(w));
  }
  return m;
}

}  // namespace shapecon
