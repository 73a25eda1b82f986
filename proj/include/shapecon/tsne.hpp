#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "shapecon/error.hpp"
#include "shapecon/rng.hpp"

namespace shapecon {

struct TsneOptions {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch = 250;
  double exaggeration = 12.0;
  int exaggeration_iters = 100;
  std::uint64_t seed = 0;
};

struct Embedding2D {
  std::vector<std::array<double, 2>> coords;
  double initial_kl = 0.0;
  double final_kl = 0.0;
};

/// Row-major N x N matrix.
using DenseMatrix = std::vector<double>;

/// Joint affinities: per-point Gaussian bandwidths found by bisection so the
/// conditional distribution matches the perplexity, then symmetrized and
/// normalized to sum to one.
inline DenseMatrix tsne_affinities(std::span<const std::vector<double>> x, double perplexity) {
  const std::size_t n = x.size();
  if (n < 4) fail(ErrorCode::kInvalidParameter, "tsne: need at least 4 points");
  if (!(perplexity > 0.0) || perplexity >= static_cast<double>(n)) {
    fail(ErrorCode::kInvalidParameter, "tsne: perplexity must be in (0, N)");
  }
  DenseMatrix d2(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].size() != x[0].size()) fail(ErrorCode::kShape, "tsne: dimension mismatch");
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) s += (x[i][k] - x[j][k]) * (x[i][k] - x[j][k]);
      d2[i * n + j] = d2[j * n + i] = s;
    }
  }
  const double target = std::log(perplexity);
  DenseMatrix p(n * n, 0.0);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    double beta = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
      double dmin = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) dmin = std::min(dmin, d2[i * n + j]);
      }
      double sum = 0.0;
      double wsum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = j == i ? 0.0 : std::exp(-beta * (d2[i * n + j] - dmin));
        sum += row[j];
        wsum += row[j] * (d2[i * n + j] - dmin);
      }
      const double entropy = std::log(sum) + beta * wsum / sum;
      for (std::size_t j = 0; j < n; ++j) p[i * n + j] = row[j] / sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-10) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
  }
  DenseMatrix joint(n * n, 0.0);
  const double norm = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      joint[i * n + j] = std::max((p[i * n + j] + p[j * n + i]) / norm, 1e-300);
    }
    joint[i * n + i] = 0.0;
  }
  return joint;
}

namespace detail {

// Student-t kernel numerators and their total.
inline double tsne_kernel(std::span<const std::array<double, 2>> y, DenseMatrix& num) {
  const std::size_t n = y.size();
  num.assign(n * n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = y[i][0] - y[j][0];
      const double dy = y[i][1] - y[j][1];
      const double v = 1.0 / (1.0 + dx * dx + dy * dy);
      num[i * n + j] = num[j * n + i] = v;
      total += 2.0 * v;
    }
  }
  return total;
}

}  // namespace detail

/// KL(P || Q) of an embedding.
inline double tsne_kl(const DenseMatrix& p, std::span<const std::array<double, 2>> y) {
  const std::size_t n = y.size();
  DenseMatrix num;
  const double total = detail::tsne_kernel(y, num);
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || p[i * n + j] <= 0.0) continue;
      const double q = std::max(num[i * n + j] / total, 1e-300);
      kl += p[i * n + j] * std::log(p[i * n + j] / q);
    }
  }
  return kl;
}

/// Analytic gradient dKL/dy_i = 4 sum_j (p_ij - q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2).
inline std::vector<std::array<double, 2>> tsne_gradient(const DenseMatrix& p,
                                                        std::span<const std::array<double, 2>> y,
                                                        double exaggeration = 1.0) {
  const std::size_t n = y.size();
  DenseMatrix num;
  const double total = detail::tsne_kernel(y, num);
  std::vector<std::array<double, 2>> g(n, {0.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = num[i * n + j];
      const double coef = 4.0 * (exaggeration * p[i * n + j] - w / total) * w;
      g[i][0] += coef * (y[i][0] - y[j][0]);
      g[i][1] += coef * (y[i][1] - y[j][1]);
    }
  }
  return g;
}

/// Exact t-SNE with momentum, per-coordinate gains and early exaggeration.
inline Embedding2D tsne(std::span<const std::vector<double>> x, const TsneOptions& opts) {
  if (opts.iterations < 0) fail(ErrorCode::kInvalidParameter, "tsne: negative iterations");
  const DenseMatrix p = tsne_affinities(x, opts.perplexity);
  const std::size_t n = x.size();
  Rng rng(opts.seed);
  Embedding2D out;
  out.coords.resize(n);
  for (auto& c : out.coords) c = {1e-4 * rng.normal(), 1e-4 * rng.normal()};
  out.initial_kl = tsne_kl(p, out.coords);

  std::vector<std::array<double, 2>> velocity(n, {0.0, 0.0});
  std::vector<std::array<double, 2>> gains(n, {1.0, 1.0});
  for (int it = 0; it < opts.iterations; ++it) {
    const double exag = it < opts.exaggeration_iters ? opts.exaggeration : 1.0;
    const double momentum = it < opts.momentum_switch ? opts.initial_momentum : opts.final_momentum;
    const auto g = tsne_gradient(p, out.coords, exag);
    for (std::size_t i = 0; i < n; ++i) {
      for (int d = 0; d < 2; ++d) {
        double& gain = gains[i][static_cast<std::size_t>(d)];
        double& v = velocity[i][static_cast<std::size_t>(d)];
        const double gd = g[i][static_cast<std::size_t>(d)];
        gain = (gd > 0.0) != (v > 0.0) ? gain + 0.2 : gain * 0.8;
        gain = std::max(gain, 0.01);
        v = momentum * v - opts.learning_rate * gain * gd;
        out.coords[i][static_cast<std::size_t>(d)] += v;
      }
    }
    // Recenter.
    double mx = 0.0, my = 0.0;
    for (const auto& c : out.coords) {
      mx += c[0];
      my += c[1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (auto& c : out.coords) {
      c[0] -= mx;
      c[1] -= my;
    }
  }
  out.final_kl = tsne_kl(p, out.coords);
  return out;
}

}  // namespace shapecon
