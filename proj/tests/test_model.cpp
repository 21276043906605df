#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "cspphase/errors.hpp"
#include "cspphase/model.hpp"

using namespace cspphase;

namespace {

// xi from the raw definition: q^-k sum over functions and tuples.
double xi_by_hand(const ConstraintModel& m) {
  const std::size_t tuples = ipow(static_cast<std::size_t>(m.q()), m.k());
  std::vector<int> t(static_cast<std::size_t>(m.k()));
  double s = 0.0;
  for (std::uint64_t f = 0; f < m.function_count(); ++f)
    for (std::size_t i = 0; i < tuples; ++i) {
      WeightTable::tuple_of(i, m.q(), t);
      s += m.function_prob(f) * m.value(f, t);
    }
  return s / static_cast<double>(tuples);
}

}  // namespace

TEST(WeightTable, IndexRoundTrip) {
  std::vector<int> t(4);
  for (std::size_t i = 0; i < 81; ++i) {
    WeightTable::tuple_of(i, 3, t);
    EXPECT_EQ(WeightTable::index_of(t, 3), i);
  }
  // last coordinate fastest
  std::vector<int> a{0, 0, 0, 1};
  EXPECT_EQ(WeightTable::index_of(a, 3), 1u);
  std::vector<int> b{1, 0, 0, 0};
  EXPECT_EQ(WeightTable::index_of(b, 3), 27u);
}

TEST(WeightTable, RejectsBadEntries) {
  EXPECT_THROW(WeightTable(2, 2, {0.0, 1.0, 1.0}), ConfigError);
  EXPECT_THROW(WeightTable(2, 2, {0.0, 1.0, 1.0, 1.5}), ConfigError);
  EXPECT_THROW(WeightTable(1, 2, {1.0}), ConfigError);
}

TEST(Model, NaesatXi) {
  for (int k = 2; k <= 6; ++k) {
    const auto m = make_naesat(k);
    EXPECT_NEAR(m.xi(), 1.0 - std::pow(2.0, 1 - k), 1e-14) << k;
    EXPECT_NEAR(m.xi(), xi_by_hand(m), 1e-14);
    EXPECT_TRUE(m.color_symmetric());
  }
}

TEST(Model, ColoringXi) {
  for (int q : {3, 4, 5}) {
    const auto m = make_hypergraph_coloring(2, q);
    EXPECT_NEAR(m.xi(), 1.0 - 1.0 / q, 1e-14);
  }
  const auto h = make_hypergraph_coloring(3, 3);
  EXPECT_NEAR(h.xi(), 1.0 - 1.0 / 9.0, 1e-14);
  EXPECT_THROW(make_hypergraph_coloring(2, 2), ConfigError);
  EXPECT_NO_THROW(make_hypergraph_coloring(2, 2, true));
}

TEST(Model, BalancedSatLambda) {
  EXPECT_NEAR(balanced_sat_lambda(3), (std::sqrt(5.0) - 1.0) / 2.0, 1e-12);
  for (int k = 3; k <= 10; ++k) {
    const double lam = balanced_sat_lambda(k);
    const double lo = std::pow(2.0, 1 - k) + k * std::pow(4.0, -k);
    const double hi = std::pow(2.0, 1 - k) + 3 * k * std::pow(4.0, -k);
    EXPECT_GT(1.0 - lam, lo) << k;
    EXPECT_LT(1.0 - lam, hi) << k;
  }
}

TEST(Model, BalancedSatIsBalanced) {
  const auto m = make_balanced_sat(3);
  const auto& e = m.expected_table();
  // E[Psi(s)] depends on s only through symmetry; row sums all agree
  std::vector<int> t(3);
  for (int pos = 0; pos < 3; ++pos) {
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      WeightTable::tuple_of(i, 2, t);
      (t[static_cast<std::size_t>(pos)] == 0 ? s0 : s1) += e[i];
    }
    EXPECT_NEAR(s0, s1, 1e-12);
  }
  EXPECT_NEAR(m.xi(), xi_by_hand(m), 1e-14);
}

TEST(Model, ParityMajorityExpandMatchesClosure) {
  const auto closed = make_parity_majority(3, false);
  const auto expanded = make_parity_majority(3, true);
  ASSERT_EQ(closed.q(), 2);
  ASSERT_EQ(closed.k(), 6);
  // the expanded family sums 46080 equal-probability tables
  EXPECT_NEAR(closed.xi(), expanded.xi(), 1e-11);
  const auto& a = closed.expected_table();
  const auto& b = expanded.expected_table();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-11);
  EXPECT_NEAR(closed.xi(), xi_by_hand(closed), 1e-10);
}

TEST(Model, PhiFirstAtUniformIsXi) {
  for (const auto& m : {make_naesat(3), make_hypergraph_coloring(2, 3), make_balanced_sat(3)}) {
    std::vector<double> mu(static_cast<std::size_t>(m.q()), 1.0 / m.q());
    EXPECT_NEAR(phi_first(m, mu), m.xi(), 1e-14);
    std::vector<double> rho(static_cast<std::size_t>(m.q() * m.q()), 1.0 / (m.q() * m.q()));
    EXPECT_NEAR(phi_second(m, rho), m.xi() * m.xi(), 1e-14);
  }
}

TEST(Model, ParityMajorityHelpersAgreeWithPhiSecond) {
  const int k = 3;
  const auto m = make_parity_majority(k);
  for (double r : {0.0, 0.1, 0.25, 0.4, 0.5}) {
    // r is the agreement fraction
    std::vector<double> rho{r / 2, (1 - r) / 2, (1 - r) / 2, r / 2};
    EXPECT_NEAR(parity_majority_phi_bar(k, r), phi_second(m, rho), 1e-12) << r;
  }
}

TEST(Model, SoftenMixesWithConstant) {
  const auto m = make_naesat(3);
  const double beta = 2.0;
  const auto s = soften(m, beta);
  EXPECT_TRUE(s.softened());
  EXPECT_EQ(s.family(), m.family());
  const double c = std::exp(-beta);
  for (std::size_t i = 0; i < m.expected_table().size(); ++i)
    EXPECT_NEAR(s.expected_table()[i], c + (1 - c) * m.expected_table()[i], 1e-14);
  EXPECT_NE(s.name().find("soft"), std::string::npos);
}

TEST(Model, JsonRoundTrip) {
  for (const auto& m : {make_naesat(3), make_hypergraph_coloring(2, 4), make_balanced_sat(3)}) {
    const auto back = model_from_json(model_to_json(m));
    EXPECT_EQ(back.q(), m.q());
    EXPECT_EQ(back.k(), m.k());
    EXPECT_NEAR(back.xi(), m.xi(), 1e-15);
    for (std::size_t i = 0; i < m.expected_table().size(); ++i)
      EXPECT_NEAR(back.expected_table()[i], m.expected_table()[i], 1e-15);
  }
  EXPECT_THROW(model_from_json("{\"q\":2}"), std::exception);
}

TEST(Model, InstanceJsonAndValidation) {
  const auto m = make_naesat(3);
  FactorGraphInstance g;
  g.n = 4;
  g.constraints.push_back({{0, 1, 2}, 0});
  g.constraints.push_back({{1, 2, 3}, 5});
  g.pins.push_back({2, 1});
  const auto back = instance_from_json(instance_to_json(g));
  EXPECT_EQ(back.n, 4);
  ASSERT_EQ(back.m(), 2u);
  EXPECT_EQ(back.constraints[1].w, 5u);
  EXPECT_EQ(back.constraints[1].vars, (std::vector<int>{1, 2, 3}));

  auto bad = g;
  bad.constraints[0].vars[0] = 7;
  EXPECT_THROW(validate_instance(bad, m), ConfigError);
  bad = g;
  bad.constraints[0].w = m.function_count();
  EXPECT_THROW(validate_instance(bad, m), ConfigError);
  bad = g;
  bad.pins.push_back({0, 2});
  EXPECT_THROW(validate_instance(bad, m), ConfigError);
}

TEST(Model, EvaluateWeightRespectsPins) {
  const auto m = make_hypergraph_coloring(2, 3);
  FactorGraphInstance g;
  g.n = 2;
  g.constraints.push_back({{0, 1}, 0});
  g.pins.push_back({0, 1});
  std::vector<int> a{1, 2}, b{0, 2}, c{1, 1};
  EXPECT_EQ(evaluate_weight(g, m, a), 1.0);
  EXPECT_EQ(evaluate_weight(g, m, b), 0.0);
  EXPECT_EQ(evaluate_weight(g, m, c), 0.0);
}

TEST(Model, ClosureSamplingMatchesProbabilities) {
  const auto m = make_naesat(3);
  Rng rng(5);
  std::vector<int> hits(m.function_count(), 0);
  const int draws = 80000;
  for (int i = 0; i < draws; ++i) ++hits[m.sample_function(rng)];
  for (std::uint64_t f = 0; f < m.function_count(); ++f) {
    const double p = m.function_prob(f);
    EXPECT_NEAR(hits[f] / static_cast<double>(draws), p, 5 * std::sqrt(p * (1 - p) / draws));
  }
}

TEST(Model, HashDistinguishesModels) {
  EXPECT_EQ(make_naesat(3).hash(), make_naesat(3).hash());
  EXPECT_NE(make_naesat(3).hash(), make_naesat(4).hash());
  EXPECT_NE(make_naesat(3).hash(), soften(make_naesat(3), 1.0).hash());
}

TEST(Alias, Frequencies) {
  std::vector<double> w{0.1, 0.0, 0.6, 0.3};
  AliasTable t(w);
  Rng rng(9);
  std::vector<int> c(4, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++c[t.sample(rng)];
  EXPECT_EQ(c[1], 0);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(c[static_cast<std::size_t>(i)] / double(draws), w[static_cast<std::size_t>(i)], 0.01);
}
