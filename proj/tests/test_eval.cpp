#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "shapecon/classifier.hpp"
#include "shapecon/cross_validation.hpp"
#include "shapecon/region_grid.hpp"
#include "shapecon/rng.hpp"
#include "shapecon/tsne.hpp"

using namespace shapecon;

namespace {

struct Toy {
  std::vector<std::vector<double>> x;
  std::vector<std::string> y;
};

// Gaussian blobs around well-separated centers, one class per center.
Toy blobs(const std::vector<std::vector<double>>& centers, int per_class, double sd, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, sd);
  Toy t;
  for (int i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < centers.size(); ++c) {
      std::vector<double> p = centers[c];
      for (double& v : p) v += n(gen);
      t.x.push_back(p);
      t.y.push_back(std::string(1, static_cast<char>('a' + c)));
    }
  }
  return t;
}

std::vector<std::vector<double>> random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> x(n, std::vector<double>(dim));
  for (auto& row : x)
    for (double& v : row) v = g(gen);
  return x;
}

}  // namespace

TEST(Classifier, SeparableTwoClassHasZeroTrainingError) {
  const Toy t = blobs({{0, 0, 0}, {4, 4, 0}}, 20, 0.3, 1);
  const auto m = train_classifier(t.x, t.y, {});
  for (std::size_t i = 0; i < t.x.size(); ++i) EXPECT_EQ(m.predict(t.x[i]), t.y[i]) << i;
}

TEST(Classifier, SeparableThreeClass) {
  const Toy t = blobs({{0, 0}, {5, 0}, {0, 5}}, 15, 0.4, 2);
  const auto m = train_classifier(t.x, t.y, {});
  for (std::size_t i = 0; i < t.x.size(); ++i) EXPECT_EQ(m.predict(t.x[i]), t.y[i]) << i;
  EXPECT_EQ(m.classes(), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Classifier, DeterministicWeights) {
  const Toy t = blobs({{0, 0}, {1, 1}}, 30, 0.8, 3);
  ClassifierOptions o;
  o.seed = 9;
  const auto a = train_classifier(t.x, t.y, o);
  const auto b = train_classifier(t.x, t.y, o);
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_EQ(a.bias(), b.bias());
}

TEST(Classifier, ArgmaxInvariantUnderAffineScoreMap) {
  const Toy t = blobs({{0, 0}, {1, 1}, {1, -1}}, 20, 0.7, 4);
  const auto m = train_classifier(t.x, t.y, {});
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (const auto& x : t.x) {
    const auto s = m.scores(x);
    const double a = u(gen), b = u(gen) - 5.0;
    std::size_t best = 0;
    for (std::size_t c = 1; c < s.size(); ++c)
      if (a * s[c] + b > a * s[best] + b) best = c;
    EXPECT_EQ(m.classes()[best], m.predict(x));
  }
}

TEST(Classifier, Errors) {
  const std::vector<std::vector<double>> x{{0.0}, {1.0}};
  const std::vector<std::string> one{"a", "a"};
  try {
    train_classifier(x, one, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidTask);
  }
  const std::vector<std::string> two{"a", "b"};
  const std::vector<std::vector<double>> ragged{{0.0}, {1.0, 2.0}};
  EXPECT_THROW(train_classifier(ragged, two, {}), Error);
  const auto m = train_classifier(x, two, {});
  EXPECT_THROW(m.scores(std::vector<double>{1.0, 2.0}), Error);
}

TEST(CrossValidate, OracleStubHasZeroError) {
  std::vector<std::string> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(i % 3 == 0 ? "x" : i % 3 == 1 ? "y" : "z");
  const auto r = cross_validate(std::span<const std::string>(labels), SplitProtocol{}, [&](const auto&, const auto& test) {
    std::vector<std::string> out;
    for (std::size_t i : test) out.push_back(labels[i]);
    return out;
  });
  ASSERT_EQ(r.classes.size(), 3u);
  for (double e : r.mean_error_percent) EXPECT_EQ(e, 0.0);
}

TEST(CrossValidate, ConstantPredictorErrors) {
  std::vector<std::string> labels;
  for (int i = 0; i < 20; ++i) labels.push_back(i % 2 ? "b" : "a");
  const auto r = cross_validate(std::span<const std::string>(labels), SplitProtocol{}, [](const auto&, const auto& test) {
    return std::vector<std::string>(test.size(), "a");
  });
  EXPECT_EQ(r.mean_error_percent, (std::vector<double>{0.0, 100.0}));
}

TEST(CrossValidate, SplitsAreStratifiedAndReproducible) {
  std::vector<std::string> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(i < 12 ? "a" : "b");
  Rng r1(7), r2(7);
  const auto s1 = stratified_split(labels, 0.75, r1);
  const auto s2 = stratified_split(labels, 0.75, r2);
  EXPECT_EQ(s1.train, s2.train);
  EXPECT_EQ(s1.test.size() + s1.train.size(), labels.size());
  int a_train = 0;
  for (std::size_t i : s1.train) a_train += labels[i] == "a";
  EXPECT_EQ(a_train, 9);
  const Toy t = blobs({{0, 0}, {3, 3}}, 12, 0.6, 8);
  SplitProtocol p;
  p.seed = 3;
  const auto e1 = cross_validate(t.x, t.y, p, {});
  const auto e2 = cross_validate(t.x, t.y, p, {});
  EXPECT_EQ(e1.mean_error_percent, e2.mean_error_percent);
  for (double e : e1.mean_error_percent) {
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 100.0);
  }
}

TEST(CrossValidate, SingletonCategoryIsStratificationError) {
  const std::vector<std::string> labels{"a", "a", "a", "b"};
  try {
    cross_validate(std::span<const std::string>(labels), SplitProtocol{}, [](const auto&, const auto& test) {
      return std::vector<std::string>(test.size(), "a");
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStratification);
  }
}

TEST(Tsne, GradientMatchesFiniteDifferences) {
  const auto x = random_points(10, 5, 11);
  const auto p = tsne_affinities(x, 3.0);
  std::mt19937_64 gen(12);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::array<double, 2>> y(10);
    for (auto& v : y) v = {g(gen), g(gen)};
    const auto grad = tsne_gradient(p, y);
    double num = 0.0, den = 0.0;
    const double h = 1e-5;
    for (std::size_t i = 0; i < y.size(); ++i) {
      for (std::size_t d = 0; d < 2; ++d) {
        auto yp = y, ym = y;
        yp[i][d] += h;
        ym[i][d] -= h;
        const double fd = (tsne_kl(p, yp) - tsne_kl(p, ym)) / (2 * h);
        num += (fd - grad[i][d]) * (fd - grad[i][d]);
        den += grad[i][d] * grad[i][d];
      }
    }
    EXPECT_LT(std::sqrt(num / den), 1e-4);
  }
}

TEST(Tsne, AffinitiesAreJointDistribution) {
  const auto x = random_points(12, 4, 13);
  const auto p = tsne_affinities(x, 5.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(p[i * 12 + i], 0.0);
    for (std::size_t j = 0; j < 12; ++j) {
      EXPECT_DOUBLE_EQ(p[i * 12 + j], p[j * 12 + i]);
      sum += p[i * 12 + j];
    }
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Tsne, FinalKlNotAboveInitial) {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const auto x = random_points(30, 6, seed);
    TsneOptions o;
    o.perplexity = 8;
    o.iterations = 300;
    o.seed = seed;
    const auto e = tsne(x, o);
    EXPECT_LE(e.final_kl, e.initial_kl);
    ASSERT_EQ(e.coords.size(), 30u);
    for (const auto& c : e.coords) EXPECT_TRUE(std::isfinite(c[0]) && std::isfinite(c[1]));
  }
}

TEST(Tsne, ZeroIterationsReturnsInitialization) {
  const auto x = random_points(8, 3, 14);
  TsneOptions o;
  o.perplexity = 3;
  o.iterations = 0;
  o.seed = 77;
  const auto e = tsne(x, o);
  Rng rng(77);
  for (const auto& c : e.coords) {
    const double a = 1e-4 * rng.normal();
    const double b = 1e-4 * rng.normal();
    EXPECT_EQ(c[0], a);
    EXPECT_EQ(c[1], b);
  }
  EXPECT_EQ(e.initial_kl, e.final_kl);
}

TEST(Tsne, DeterministicAndPerplexityChecked) {
  const auto x = random_points(10, 3, 15);
  TsneOptions o;
  o.perplexity = 4;
  o.iterations = 50;
  EXPECT_EQ(tsne(x, o).coords, tsne(x, o).coords);
  o.perplexity = 10;
  try {
    tsne(x, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidParameter);
  }
  EXPECT_THROW(tsne(random_points(3, 2, 1), TsneOptions{.perplexity = 1}), Error);
}

TEST(RegionGrid, HomogeneousNeighborhoodHasWeightOne) {
  std::vector<std::array<double, 2>> pts{{0, 0}, {0.1, 0}, {0, 0.1}, {5, 5}};
  std::vector<std::string> labels{"a", "a", "a", "b"};
  const auto c = majority_at(0.05, 0.05, pts, labels, 3);
  EXPECT_EQ(c.label, "a");
  EXPECT_EQ(c.weight, 1.0);
}

TEST(RegionGrid, SymmetricMidpointHasWeightHalf) {
  std::vector<std::array<double, 2>> pts{{-1, 0}, {-2, 0}, {1, 0}, {2, 0}};
  std::vector<std::string> labels{"b", "b", "a", "a"};
  const auto c = majority_at(0.0, 0.0, pts, labels, 2);
  EXPECT_EQ(c.weight, 0.5);
  EXPECT_EQ(c.label, "a");
  RegionGridOptions o;
  o.k_fraction = 0.5;
  o.resolution = 3;
  const auto cells = region_grid(pts, labels, o);
  ASSERT_EQ(cells.size(), 9u);
  EXPECT_NEAR(cells[4].cx, 0.0, 1e-12);
  EXPECT_EQ(cells[4].weight, 0.5);
}

TEST(RegionGrid, ProportionsMatchBruteForce) {
  std::mt19937_64 gen(16);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<std::array<double, 2>> pts;
  std::vector<std::string> labels;
  for (int i = 0; i < 60; ++i) {
    pts.push_back({u(gen), u(gen)});
    labels.push_back(std::string(1, static_cast<char>('a' + gen() % 3)));
  }
  RegionGridOptions o;
  o.k_fraction = 0.1;
  o.resolution = 12;
  const auto cells = region_grid(pts, labels, o);
  ASSERT_EQ(cells.size(), 144u);
  const std::size_t k = 6;
  for (const auto& c : cells) {
    // Brute force: count labels among points no farther than the k-th distance.
    std::vector<double> d;
    for (const auto& p : pts) d.push_back(std::hypot(p[0] - c.cx, p[1] - c.cy));
    auto sorted = d;
    std::sort(sorted.begin(), sorted.end());
    std::map<std::string, int> counts;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (d[i] <= sorted[k - 1]) ++counts[labels[i]];
    int best = 0;
    std::string best_label;
    for (const auto& [l, n] : counts)
      if (n > best) best = n, best_label = l;
    EXPECT_EQ(c.weight, static_cast<double>(best) / k);
    EXPECT_EQ(c.label, best_label);
    EXPECT_GE(c.weight, 0.0);
    EXPECT_LE(c.weight, 1.0);
  }
}

TEST(RegionGrid, Errors) {
  std::vector<std::array<double, 2>> pts{{0, 0}, {1, 1}};
  std::vector<std::string> labels{"a", "b"};
  RegionGridOptions o;
  o.k_fraction = 1.5;
  EXPECT_THROW(region_grid(pts, labels, o), Error);
  o.k_fraction = 0.5;
  o.resolution = 1;
  EXPECT_THROW(region_grid(pts, labels, o), Error);
  std::vector<std::string> short_labels{"a"};
  EXPECT_THROW(region_grid(pts, short_labels, {}), Error);
}
