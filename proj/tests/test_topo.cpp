#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "oracles.hpp"
#include "shapecon/concepts.hpp"
#include "shapecon/model_io.hpp"
#include "shapecon/topo.hpp"

using namespace shapecon;

namespace {

TopoSpace tree_space(int n, const std::vector<std::pair<int, int>>& edges,
                     const std::vector<double>& distances) {
  TopoSpace s;
  s.vertex_count = n;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    s.edges.push_back({edges[i].first, edges[i].second, 0.0, distances[i]});
  }
  return s;
}

// First radius index covering d, by linear scan.
std::size_t covering_step(const std::vector<double>& radii, double d) {
  for (std::size_t i = 0; i < radii.size(); ++i) if (radii[i] >= d) return i;
  return radii.size() - 1;
}

}  // namespace

TEST(BuildSpace, TwoVectorsGiveSingleEdge) {
  const std::vector<std::vector<double>> s{{1, 0}, {0, 1}};
  const auto sp = build_space(s);
  ASSERT_EQ(sp.edges.size(), 1u);
  EXPECT_EQ(sp.edges[0].u, 0);
  EXPECT_EQ(sp.edges[0].v, 1);
  EXPECT_DOUBLE_EQ(sp.edges[0].weight, 1.0);
}

TEST(BuildSpace, TooFewSamples) {
  const std::vector<std::vector<double>> s{{1, 0}};
  try {
    build_space(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewSamples);
  }
}

TEST(BuildSpace, MatchesSpanningTreeEnumeration) {
  // Brute force over all (n-1)-edge subsets of K_n that are spanning trees.
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + trial % 3;
    std::vector<std::vector<double>> stim;
    for (int i = 0; i < n; ++i) stim.push_back(oracle::random_distribution(6, gen, 0.3));
    const auto sp = build_space(stim);
    std::vector<oracle::WeightedEdge> all;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) all.push_back({a, b, oracle::jsd(stim[static_cast<std::size_t>(a)], stim[static_cast<std::size_t>(b)])});
    double best = 1e9;
    const unsigned m = static_cast<unsigned>(all.size());
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      if (__builtin_popcount(mask) != n - 1) continue;
      std::vector<std::pair<int, int>> e;
      double w = 0;
      for (unsigned k = 0; k < m; ++k) if (mask & (1u << k)) e.emplace_back(all[k].u, all[k].v), w += all[k].w;
      if (oracle::count_components(n, e) == 1) best = std::min(best, w);
    }
    double got = 0;
    for (const auto& e : sp.edges) got += e.weight;
    EXPECT_NEAR(got, best, 1e-12);
    std::vector<std::pair<int, int>> te;
    for (const auto& e : sp.edges) te.emplace_back(e.u, e.v);
    EXPECT_EQ(oracle::count_components(n, te), 1);
  }
}

TEST(BuildSpace, TriangleExample) {
  // Weights are JSD between normalized stimuli; pick vectors and check the
  // brute-force rule on the resulting triangle: the heaviest edge is dropped.
  const std::vector<std::vector<double>> s{{1, 0, 0}, {0.8, 0.2, 0}, {0.5, 0.3, 0.2}};
  const double ab = oracle::jsd({1, 0, 0}, {0.8, 0.2, 0});
  const double bc = oracle::jsd({0.8, 0.2, 0}, {0.5, 0.3, 0.2});
  const double ac = oracle::jsd({1, 0, 0}, {0.5, 0.3, 0.2});
  ASSERT_LT(ab, ac);
  ASSERT_LT(bc, ac);
  const auto sp = build_space(s);
  std::set<std::pair<int, int>> got;
  for (const auto& e : sp.edges) got.emplace(e.u, e.v);
  EXPECT_EQ(got, (std::set<std::pair<int, int>>{{0, 1}, {1, 2}}));
}

TEST(BuildSpace, DuplicateVectorsGiveZeroWeightEdge) {
  const std::vector<std::vector<double>> s{{1, 2, 3}, {1, 2, 3}, {3, 2, 1}};
  const auto sp = geodesic_heats(build_space(s));
  EXPECT_EQ(sp.edges[0].weight, 0.0);
  const auto f = filtrate(sp);
  EXPECT_EQ(f.events.size(), 2u);
}

TEST(BuildSpace, ZeroStimuliTreatedAsUniform) {
  const std::vector<std::vector<double>> s{{0, 0}, {1, 1}, {1, 0}};
  const auto sp = build_space(s);
  EXPECT_EQ(sp.edges[0].weight, 0.0);  // {0,0} and {1,1} are both uniform
}

TEST(Heats, ThreePathHandValues) {
  const auto sp = geodesic_heats(tree_space(3, {{0, 1}, {1, 2}}, {0, 0}));
  EXPECT_DOUBLE_EQ(sp.raw_heats[0], 1.0);
  EXPECT_DOUBLE_EQ(sp.raw_heats[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(sp.raw_heats[2], 1.0);
  EXPECT_DOUBLE_EQ(sp.heats[0], 0.0);
  EXPECT_DOUBLE_EQ(sp.heats[1], 1.0);
  EXPECT_DOUBLE_EQ(sp.heats[2], 0.0);
  EXPECT_DOUBLE_EQ(sp.edges[0].distance, 0.5);
  EXPECT_DOUBLE_EQ(sp.edges[1].distance, 0.5);
}

TEST(Heats, StarLeafEdgesEqual) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < 7; ++i) e.emplace_back(0, i);
  const auto sp = geodesic_heats(tree_space(7, e, std::vector<double>(6, 0.0)));
  for (const auto& x : sp.edges) EXPECT_EQ(x.distance, sp.edges[0].distance);
}

TEST(Heats, MatchFloydWarshallAndRanking) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 11);
    const auto e = oracle::random_tree(n, gen);
    const auto sp = geodesic_heats(tree_space(n, e, std::vector<double>(e.size(), 0.0)));
    const auto d = oracle::floyd(n, e);
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int j = 0; j < n; ++j) s += d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      EXPECT_NEAR(sp.raw_heats[static_cast<std::size_t>(i)], s / n, 1e-12);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (sp.raw_heats[static_cast<std::size_t>(i)] < sp.raw_heats[static_cast<std::size_t>(j)]) {
          EXPECT_GT(sp.heats[static_cast<std::size_t>(i)], sp.heats[static_cast<std::size_t>(j)]);
        }
    for (const auto& x : sp.edges) {
      EXPECT_GE(x.distance, 0.0);
      EXPECT_LE(x.distance, 1.0);
    }
  }
}

TEST(Heats, RelabelingEquivariance) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(gen() % 8);
    const auto e = oracle::random_tree(n, gen);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<std::pair<int, int>> pe;
    for (auto [a, b] : e) {
      const int x = perm[static_cast<std::size_t>(a)], y = perm[static_cast<std::size_t>(b)];
      pe.emplace_back(std::min(x, y), std::max(x, y));
    }
    const auto s1 = geodesic_heats(tree_space(n, e, std::vector<double>(e.size(), 0.0)));
    const auto s2 = geodesic_heats(tree_space(n, pe, std::vector<double>(e.size(), 0.0)));
    for (int i = 0; i < n; ++i) {
      EXPECT_EQ(s1.heats[static_cast<std::size_t>(i)], s2.heats[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
    }
  }
}

TEST(Heats, DisconnectedIsInvalidSpace) {
  // Right edge count, but a cycle leaves vertex 3 unreachable.
  TopoSpace s = tree_space(4, {{0, 1}, {1, 2}, {0, 2}}, {0, 0, 0});
  try {
    geodesic_heats(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidSpace);
  }
}

TEST(Heats, SingleVertexAndUniformHeat) {
  const auto two = geodesic_heats(tree_space(2, {{0, 1}}, {0}));
  EXPECT_EQ(two.heats[0], 1.0);
  EXPECT_EQ(two.edges[0].distance, 1.0);
}

TEST(Radii, StepFromMinimumPositive) {
  const std::vector<double> d{0.2, 0.2, 0.9};
  const auto r = filtration_radii(d, 1000);
  EXPECT_DOUBLE_EQ(r.front(), 0.2);
  EXPECT_GE(r.back(), 0.9);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GT(r[i], r[i - 1]);
  EXPECT_EQ(r.size(), 5u);  // 0.2, 0.4, 0.6, 0.8, 1.0
}

TEST(Radii, StepStretchedToFitMaxSteps) {
  const std::vector<double> d{0.001, 1.0};
  const auto r = filtration_radii(d, 10);
  EXPECT_EQ(r.size(), 10u);
  EXPECT_DOUBLE_EQ(r.front(), 0.001);
  EXPECT_DOUBLE_EQ(r.back(), 1.0);
  EXPECT_THROW(filtration_radii(d, 1), Error);
}

TEST(Radii, AllZeroIsSingleStep) {
  const std::vector<double> d{0.0, 0.0};
  EXPECT_EQ(filtration_radii(d, 100), std::vector<double>{0.0});
  const auto f = filtrate(tree_space(3, {{0, 1}, {1, 2}}, d));
  EXPECT_EQ(f.epsilons.size(), 1u);
  EXPECT_EQ(f.annexation_counts[0], 2);
  EXPECT_EQ(f.components_after(0), 1);
}

TEST(Filtrate, FourPathExample) {
  const auto f = filtrate(tree_space(4, {{0, 1}, {1, 2}, {2, 3}}, {0.2, 0.2, 0.9}));
  const std::size_t s02 = covering_step(f.epsilons, 0.2);
  const std::size_t s09 = covering_step(f.epsilons, 0.9);
  EXPECT_EQ(f.annexation_counts[s02], 2);
  EXPECT_EQ(f.annexation_counts[s09], 1);
  int total = 0;
  for (int c : f.annexation_counts) total += c;
  EXPECT_EQ(total, 3);
  // Vertex 0,1 merge first ({0} survives: equal sizes, smaller id), then
  // {0,1} absorbs 2, then {0,1,2} absorbs 3.
  EXPECT_EQ(f.barcode[1].death, 0.0);
  EXPECT_EQ(f.barcode[2].death, 0.0);
  EXPECT_EQ(f.barcode[3].death, 1.0);
  EXPECT_TRUE(std::isinf(f.barcode[0].death));
}

TEST(Filtrate, OracleEquivalenceOnRandomTrees) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 12);
    const auto e = oracle::random_tree(n, gen);
    std::vector<double> d;
    for (std::size_t i = 0; i < e.size(); ++i) {
      // Mix of tied, zero and continuous distances.
      const auto r = gen() % 4;
      d.push_back(r == 0 ? 0.0 : r == 1 ? 0.25 * static_cast<double>(gen() % 4) : std::uniform_real_distribution<double>(0, 1)(gen));
    }
    const auto f = filtrate(tree_space(n, e, d), 2 + static_cast<int>(gen() % 50));
    std::vector<oracle::WeightedEdge> we;
    for (std::size_t i = 0; i < e.size(); ++i) we.push_back({e[i].first, e[i].second, d[i]});
    const auto deaths = oracle::single_linkage_deaths(n, we);
    auto sorted = we;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      return std::tie(a.w, a.u, a.v) < std::tie(b.w, b.u, b.v);
    });
    int survivors = 0;
    for (int v = 0; v < n; ++v) {
      const int k = deaths[static_cast<std::size_t>(v)];
      if (k < 0) {
        ++survivors;
        EXPECT_TRUE(std::isinf(f.barcode[static_cast<std::size_t>(v)].death));
        continue;
      }
      const double t = f.time_of_step(covering_step(f.epsilons, sorted[static_cast<std::size_t>(k)].w));
      EXPECT_EQ(f.barcode[static_cast<std::size_t>(v)].death, t) << "trial " << trial << " vertex " << v;
    }
    EXPECT_EQ(survivors, 1);
    EXPECT_EQ(f.events.size(), static_cast<std::size_t>(n - 1));
    ASSERT_EQ(f.graph.size(), static_cast<std::size_t>(n - 1));
    // Component counts per step against relaxation on edges within radius.
    for (std::size_t s = 0; s < f.epsilons.size(); ++s) {
      std::vector<std::pair<int, int>> in;
      for (std::size_t i = 0; i < e.size(); ++i) if (covering_step(f.epsilons, d[i]) <= s) in.push_back(e[i]);
      EXPECT_EQ(f.components_after(static_cast<int>(s)), oracle::count_components(n, in));
      // Cut consistency: F cut at this step's time gives the same partition.
      std::vector<std::vector<int>> cut = cut_components(f, f.time_of_step(s));
      EXPECT_EQ(std::set<std::vector<int>>(cut.begin(), cut.end()),
                oracle::partition(oracle::components(n, in)));
    }
    for (const auto& b : f.barcode) {
      EXPECT_EQ(b.birth, 0.0);
      if (!std::isinf(b.death)) {
        EXPECT_GE(b.death, 0.0);
        EXPECT_LE(b.death, 1.0);
      }
    }
  }
}

TEST(Filtrate, ComponentCountMonotone) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 10);
    const auto e = oracle::random_tree(n, gen);
    std::vector<double> d;
    for (std::size_t i = 0; i < e.size(); ++i) d.push_back(std::uniform_real_distribution<double>(0, 1)(gen));
    const auto f = filtrate(tree_space(n, e, d));
    int prev = n;
    for (std::size_t s = 0; s < f.epsilons.size(); ++s) {
      const int c = f.components_after(static_cast<int>(s));
      EXPECT_LE(c, prev);
      prev = c;
    }
    EXPECT_EQ(prev, 1);
    EXPECT_EQ(f.components_after(-1), n);
  }
}

TEST(Filtrate, SurvivorTieGoesToSmallerId) {
  // Equal-size components {0,1} and {2,3} joined by the last edge.
  const auto f = filtrate(tree_space(4, {{0, 1}, {2, 3}, {1, 2}}, {0.1, 0.1, 0.5}));
  EXPECT_TRUE(std::isinf(f.barcode[0].death));
  EXPECT_EQ(f.barcode[2].death, 1.0);
  // Larger component wins even with the larger id.
  const auto g = filtrate(tree_space(4, {{1, 2}, {2, 3}, {0, 1}}, {0.1, 0.1, 0.5}));
  EXPECT_TRUE(std::isinf(g.barcode[1].death));
  EXPECT_EQ(g.barcode[0].death, 1.0);
}

TEST(Filtrate, RejectsNonTree) {
  EXPECT_THROW(filtrate(tree_space(3, {{0, 1}}, {0.1})), Error);
}

TEST(Curve, SumsAndEpsilonMax) {
  const auto f = filtrate(tree_space(4, {{0, 1}, {1, 2}, {2, 3}}, {0.2, 0.2, 0.9}));
  const auto c = annexation_curve(f);
  int total = 0;
  for (const auto& p : c) total += p.count;
  EXPECT_EQ(total, 3);
  EXPECT_EQ(epsilon_max(f), 0.0);
  const auto single = filtrate(tree_space(2, {{0, 1}}, {0.3}));
  const auto sc = annexation_curve(single);
  int nonzero = 0;
  for (const auto& p : sc) nonzero += p.count != 0;
  EXPECT_EQ(nonzero, 1);
  EXPECT_EQ(epsilon_max(single), 0.0);
  Filtration empty;
  try {
    epsilon_max(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kModelState);
  }
}

TEST(Curve, EpsilonMaxTieIsEarliest) {
  const auto f = filtrate(tree_space(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}, {0.1, 0.1, 0.3, 0.3}));
  EXPECT_EQ(epsilon_max(f), 0.0);
  const auto g = filtrate(tree_space(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}, {0.1, 0.3, 0.3, 0.2}));
  EXPECT_EQ(epsilon_max(g), 1.0);
}

TEST(Filtration, JsonRoundTripIsExact) {
  const auto f = filtrate(tree_space(4, {{0, 1}, {1, 2}, {2, 3}}, {0.2, 0.3, 0.9}));
  const auto text = to_json(f).dump();
  const auto back = filtration_from_json(parse_json(text));
  EXPECT_EQ(to_json(back).dump(), text);
  EXPECT_TRUE(std::isinf(back.barcode[0].death));
}
