#pragma once

#include <array>
#include <cmath>
#include <span>

#include "shapecon/divergence.hpp"
#include "shapecon/error.hpp"

namespace shapecon {

inline constexpr std::size_t kFeatureBins = 11;
inline constexpr std::size_t kDescriptorBins = 3 * kFeatureBins;
inline constexpr double kDescriptorSmoothing = 1e-6;

/// 33-bin angular-feature histogram (three 11-bin blocks), L1-normalized.
struct Descriptor {
  std::array<double, kDescriptorBins> bins{};

  std::span<const double> view() const { return bins; }

  /// Adds the smoothing constant to every bin and L1-normalizes.
  static Descriptor from_counts(std::span<const double> counts) {
    if (counts.size() != kDescriptorBins) {
      fail(ErrorCode::kShape, "descriptor needs 33 bins");
    }
    Descriptor d;
    double sum = 0.0;
    for (std::size_t i = 0; i < kDescriptorBins; ++i) {
      if (counts[i] < 0.0 || !std::isfinite(counts[i])) {
        fail(ErrorCode::kShape, "descriptor counts must be finite and non-negative");
      }
      d.bins[i] = counts[i] + kDescriptorSmoothing;
      sum += d.bins[i];
    }
    for (double& b : d.bins) b /= sum;
    return d;
  }

  bool valid(double tol = 1e-9) const {
    double sum = 0.0;
    for (double b : bins) {
      if (!(b >= 0.0) || !std::isfinite(b)) return false;
      sum += b;
    }
    return std::abs(sum - 1.0) <= tol;
  }

  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

inline double jsd(const Descriptor& a, const Descriptor& b) {
  return jsd(a.view(), b.view());
}

inline double squared_l2(const Descriptor& a, const Descriptor& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < kDescriptorBins; ++i) {
    const double d = a.bins[i] - b.bins[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace shapecon
