#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "cspphase/graphs.hpp"
#include "cspphase/model.hpp"
#include "cspphase/errors.hpp"
#include "cspphase/stats.hpp"
#include "test_util.hpp"

using namespace cspphase;

TEST(Graphs, NullSamplerShape) {
  const auto m = make_naesat(3);
  Rng rng(1);
  const auto g = sample_null(50, 80, m, false, rng);
  EXPECT_EQ(g.n, 50);
  EXPECT_EQ(g.m(), 80u);
  EXPECT_NO_THROW(validate_instance(g, m));
}

TEST(Graphs, SimpleSamplerIsSimple) {
  const auto m = make_hypergraph_coloring(2, 3);
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto g = sample_null(30, 40, m, true, rng);
    EXPECT_TRUE(is_simple(g));
  }
  FactorGraphInstance loop;
  loop.n = 3;
  loop.constraints.push_back({{1, 1}, 0});
  EXPECT_FALSE(is_simple(loop));
  FactorGraphInstance dup;
  dup.n = 3;
  dup.constraints.push_back({{0, 1}, 0});
  dup.constraints.push_back({{1, 0}, 0});
  EXPECT_FALSE(is_simple(dup));
}

TEST(Graphs, SampleMIsPoisson) {
  Rng rng(3);
  RunningStat s;
  for (int i = 0; i < 20000; ++i) s.add(sample_m(100, 3.0, 3, rng));
  EXPECT_NEAR(s.mean(), 100.0, 5 * s.stderr_of_mean());
  EXPECT_NEAR(s.variance(), 100.0, 5.0);
}

TEST(Graphs, PlantedConstraintsAreSatisfied) {
  for (const auto& m : {make_naesat(3), make_hypergraph_coloring(2, 4), make_balanced_sat(3), make_parity_majority(3)}) {
    Rng rng(4);
    const auto sigma = balanced_assignment(60, m.q(), rng);
    const auto g = sample_planted(60, 100, m, sigma, rng);
    EXPECT_GT(evaluate_weight(g, m, sigma), 0.0) << m.name();
  }
}

TEST(Graphs, PlantedLawMatchesDefinition) {
  // n = 3, one constraint: P(tuple, psi) ~ psi(sigma(tuple)) P(psi)
  const auto m = make_naesat(2);
  const std::vector<int> sigma{0, 0, 1};
  std::map<std::vector<int>, int> hits;
  Rng rng(5);
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) {
    const auto g = sample_planted(3, 1, m, sigma, rng);
    auto key = g.constraints[0].vars;
    key.push_back(static_cast<int>(g.constraints[0].w));
    ++hits[key];
  }
  double total = 0.0;
  std::map<std::vector<int>, double> expect;
  std::vector<int> t(2);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (std::uint64_t f = 0; f < m.function_count(); ++f) {
        t = {sigma[static_cast<std::size_t>(a)], sigma[static_cast<std::size_t>(b)]};
        const double w = m.function_prob(f) * m.value(f, t);
        if (w > 0) expect[{a, b, static_cast<int>(f)}] = w;
        total += w;
      }
  for (auto& [key, w] : expect) {
    const double p = w / total;
    EXPECT_NEAR(hits[key] / double(draws), p, 5 * std::sqrt(p * (1 - p) / draws));
  }
  int seen = 0;
  for (auto& [key, c] : hits) seen += expect.count(key) ? 0 : c;
  EXPECT_EQ(seen, 0);
}

TEST(Graphs, SigmaHatLaw) {
  // Pr[sigma] ~ phi(rho_sigma)^m, checked over all 2^4 assignments
  const auto m = make_naesat(3);
  const int n = 4, mm = 3;
  std::map<std::vector<int>, int> hits;
  Rng rng(6);
  const int draws = 80000;
  for (int i = 0; i < draws; ++i) ++hits[sample_sigma_hat(n, mm, m, rng)];
  double total = 0.0;
  std::map<std::vector<int>, double> w;
  brute::brute_force(n, 2, [&](const std::vector<int>& s) {
    const double x = std::pow(phi_first(m, color_density(s, 2)), mm);
    w[s] = x;
    total += x;
  });
  for (auto& [s, x] : w) {
    const double p = x / total;
    EXPECT_NEAR(hits[s] / double(draws), p, 5 * std::sqrt(p * (1 - p) / draws));
  }
}

TEST(Graphs, BalancedAssignmentCounts) {
  Rng rng(7);
  const auto s = balanced_assignment(11, 3, rng);
  const auto rho = color_density(s, 3);
  EXPECT_NEAR(rho[0], 4.0 / 11, 1e-15);
  EXPECT_NEAR(rho[1], 4.0 / 11, 1e-15);
  EXPECT_NEAR(rho[2], 3.0 / 11, 1e-15);
}

TEST(Graphs, PinSizesAreUniform) {
  const auto m = make_naesat(3);
  Rng rng(8);
  auto g = sample_null(12, 5, m, false, rng);
  std::vector<int> counts(11, 0);
  const std::vector<int> ref(12, 1);
  for (int i = 0; i < 11000; ++i) {
    const auto r = pin(g, 10, [&](Rng&) { return ref; }, rng);
    ASSERT_EQ(r.instance.pins.size(), static_cast<std::size_t>(r.theta));
    for (const auto& p : r.instance.pins) EXPECT_EQ(p.value, 1);
    ++counts[static_cast<std::size_t>(r.theta)];
  }
  for (int c : counts) EXPECT_NEAR(c, 1000, 5 * std::sqrt(1000.0));
}

TEST(Graphs, GwTreeOffspring) {
  const auto m = make_naesat(3);
  Rng rng(9);
  RunningStat kids;
  for (int t = 0; t < 4000; ++t) {
    const auto tree = sample_gw_tree(2.5, m, 1, rng);
    kids.add(tree.var_child_count[0]);
    EXPECT_EQ(tree.variables(), 1 + 2 * tree.constraints());
  }
  EXPECT_NEAR(kids.mean(), 2.5, 5 * kids.stderr_of_mean());
}

TEST(Graphs, GwTreeGuard) {
  const auto m = make_naesat(3);
  Rng rng(10);
  EXPECT_THROW(sample_gw_tree(6.0, m, 12, rng, 1000), SizeGuardError);
}

TEST(Graphs, BroadcastProducesSatisfiedConstraints) {
  const auto m = make_hypergraph_coloring(3, 3);
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto tree = sample_gw_tree(2.0, m, 3, rng);
    broadcast(tree, m, rng);
    std::vector<int> tuple(3);
    for (std::size_t a = 0; a < tree.constraints(); ++a) {
      const int h = tree.con_position[a];
      for (int i = 0, j = 0; i < 3; ++i)
        tuple[static_cast<std::size_t>(i)] = i == h ? tree.values[static_cast<std::size_t>(tree.con_parent[a])]
                                                    : tree.values[static_cast<std::size_t>(tree.con_first_child[a] + j++)];
      EXPECT_GT(m.value(tree.con_function[a], tuple), 0.0);
    }
  }
}

TEST(Graphs, BroadcastRootIsUniform) {
  const auto m = make_hypergraph_coloring(2, 3);
  Rng rng(12);
  std::vector<int> c(3, 0);
  for (int i = 0; i < 30000; ++i) {
    auto tree = sample_gw_tree(1.0, m, 1, rng);
    broadcast(tree, m, rng);
    ++c[static_cast<std::size_t>(tree.values[0])];
  }
  for (int x : c) EXPECT_NEAR(x, 10000, 5 * std::sqrt(10000.0 * 2 / 3));
}
