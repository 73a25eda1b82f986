#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "shapecon/error.hpp"

namespace shapecon {

namespace detail {

// p * log2(p / m) with the 0 log 0 = 0 convention.
inline double kl_term(double p, double m) {
  if (p <= 0.0) return 0.0;
  return p * std::log2(p / m);
}

}  // namespace detail

/// Base-2 Jensen-Shannon divergence of two distributions, in [0, 1].
///
/// Inputs are expected to be L1-normalized and non-negative; see
/// normalized_distribution() for the conversion used on raw vectors.
inline double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    fail(ErrorCode::kShape, "jsd: dimension mismatch (" +
                                std::to_string(p.size()) + " vs " +
                                std::to_string(q.size()) + ")");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (m <= 0.0) continue;
    acc += 0.5 * detail::kl_term(p[i], m) + 0.5 * detail::kl_term(q[i], m);
  }
  // Rounding can push identical inputs a hair below zero or disjoint ones
  // above one.
  if (acc < 0.0) return 0.0;
  if (acc > 1.0) return 1.0;
  return acc;
}

/// L1-normalizes a non-negative vector; an all-zero vector maps to uniform.
inline std::vector<double> normalized_distribution(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  if (out.empty()) return out;
  double sum = 0.0;
  for (double x : out) {
    if (x < 0.0 || !std::isfinite(x)) {
      fail(ErrorCode::kShape, "normalized_distribution: negative or non-finite entry");
    }
    sum += x;
  }
  if (sum <= 0.0) {
    const double u = 1.0 / static_cast<double>(out.size());
    for (double& x : out) x = u;
    return out;
  }
  for (double& x : out) x /= sum;
  return out;
}

}  // namespace shapecon
