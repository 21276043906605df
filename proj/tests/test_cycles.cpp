#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "cspphase/cycles.hpp"
#include "cspphase/errors.hpp"
#include "cspphase/graphs.hpp"
#include "cspphase/spectral.hpp"
#include "cspphase/stats.hpp"
#include "test_util.hpp"

using namespace cspphase;

namespace {

CycleSignature sig(std::initializer_list<CycleStep> steps) { return CycleSignature{steps}; }

// Chooses the constraints first, then checks the variable conditions.
std::uint64_t count_by_constraints(const FactorGraphInstance& g, const CycleSignature& y) {
  const int ell = y.order();
  const int m = static_cast<int>(g.m());
  std::vector<int> cons(static_cast<std::size_t>(ell));
  std::uint64_t count = 0;
  std::function<void(int)> rec = [&](int i) {
    if (i == ell) {
      std::vector<int> vars(static_cast<std::size_t>(ell));
      for (int j = 0; j < ell; ++j) {
        const auto& c = g.constraints[static_cast<std::size_t>(cons[static_cast<std::size_t>(j)])];
        const auto& st = y.steps[static_cast<std::size_t>(j)];
        if (c.w != st.w) return;
        vars[static_cast<std::size_t>(j)] = c.vars[static_cast<std::size_t>(st.s)];
      }
      for (int j = 0; j < ell; ++j) {
        const auto& c = g.constraints[static_cast<std::size_t>(cons[static_cast<std::size_t>(j)])];
        if (c.vars[static_cast<std::size_t>(y.steps[static_cast<std::size_t>(j)].t)] != vars[static_cast<std::size_t>((j + 1) % ell)]) return;
      }
      auto sorted = vars;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return;
      if (vars[0] != sorted[0]) return;
      if (ell > 1 && !(cons[0] < cons[static_cast<std::size_t>(ell - 1)])) return;
      ++count;
      return;
    }
    for (int h = 0; h < m; ++h) {
      if (std::find(cons.begin(), cons.begin() + i, h) != cons.begin() + i) continue;
      cons[static_cast<std::size_t>(i)] = h;
      rec(i + 1);
    }
  };
  rec(0);
  return count;
}

}  // namespace

TEST(Cycles, KappaOrderOneNaesat) {
  const auto m = make_naesat(3);
  const auto y = sig({{0, 0, 1}});
  const auto c = signature_constants(y, 3.0, m);
  EXPECT_NEAR(c.kappa, (3.0 / 3) * m.function_prob(0), 1e-15);
}

TEST(Cycles, KappaHigherOrder) {
  const auto m = make_hypergraph_coloring(2, 3);
  const auto y = sig({{0, 0, 1}, {0, 0, 1}, {0, 0, 1}});
  const auto c = signature_constants(y, 2.0, m);
  EXPECT_NEAR(c.kappa, std::pow(1.0, 3) / 6.0, 1e-15);
  // Tr(Phi^3) = 1 + 2 (-1/2)^3
  EXPECT_NEAR(c.trace, 0.75, 1e-14);
  EXPECT_NEAR(c.kappa_hat, c.kappa * c.trace, 1e-15);
  EXPECT_NEAR(c.delta, -0.25, 1e-14);
}

TEST(Cycles, ColoringTraces) {
  const auto m = make_hypergraph_coloring(2, 3);
  EXPECT_NEAR(signature_constants(sig({{0, 0, 1}}), 1.0, m).trace, 0.0, 1e-14);
  EXPECT_NEAR(signature_constants(sig({{0, 0, 1}, {0, 1, 0}}), 1.0, m).trace, 1.5, 1e-14);
}

TEST(Cycles, SignatureValidation) {
  const auto m = make_hypergraph_coloring(2, 3);
  EXPECT_THROW(validate_signature(sig({{0, 1, 0}}), m), ConfigError);
  EXPECT_THROW(validate_signature(sig({{0, 0, 0}, {0, 0, 1}}), m), ConfigError);
  EXPECT_THROW(validate_signature(sig({{1, 0, 1}}), m), ConfigError);
  EXPECT_THROW(validate_signature(sig({{0, 0, 2}}), m), ConfigError);
  EXPECT_THROW(validate_signature(CycleSignature{}, m), ConfigError);
  EXPECT_EQ(sig({{0, 0, 1}, {0, 1, 0}}).to_string(), "0:1>2 0:2>1");
}

TEST(Cycles, HandBuiltTwoCycle) {
  FactorGraphInstance g;
  g.n = 3;
  g.constraints.push_back({{0, 1}, 0});
  g.constraints.push_back({{1, 0}, 0});
  EXPECT_EQ(count_cycles(g, sig({{0, 0, 1}, {0, 0, 1}})), 1u);
  EXPECT_EQ(count_cycles(g, sig({{0, 0, 1}, {0, 1, 0}})), 0u);
  g.constraints[1].vars = {0, 1};
  EXPECT_EQ(count_cycles(g, sig({{0, 0, 1}, {0, 0, 1}})), 0u);
  EXPECT_EQ(count_cycles(g, sig({{0, 0, 1}, {0, 1, 0}})), 1u);
  // a self loop is an order-1 cycle
  g.constraints.push_back({{2, 2}, 0});
  EXPECT_EQ(count_cycles(g, sig({{0, 0, 1}})), 1u);
}

TEST(Cycles, TriangleCountedOnce) {
  FactorGraphInstance g;
  g.n = 4;
  g.constraints.push_back({{0, 1}, 0});
  g.constraints.push_back({{1, 2}, 0});
  g.constraints.push_back({{2, 0}, 0});
  // the two traversal directions: exactly one of them is the canonical count
  EXPECT_EQ(count_cycles(g, sig({{0, 0, 1}, {0, 0, 1}, {0, 0, 1}})) +
                count_cycles(g, sig({{0, 1, 0}, {0, 1, 0}, {0, 1, 0}})),
            1u);
  EXPECT_EQ(count_cycles(g, sig({{0, 0, 1}, {0, 1, 0}, {0, 0, 1}})), 0u);
}

TEST(Cycles, CounterMatchesConstraintFirstOracle) {
  const auto m = make_hypergraph_coloring(3, 2, true);
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = brute::random_instance(6, 8, m, rng);
    std::vector<CycleSignature> ys;
    for (int ell = 1; ell <= 3; ++ell)
      for (const auto& y : enumerate_signatures(m, ell)) ys.push_back(y);
    const auto fast = count_cycles(g, ys);
    for (std::size_t i = 0; i < ys.size(); ++i) ASSERT_EQ(fast[i], count_by_constraints(g, ys[i])) << ys[i].to_string();
  }
}

TEST(Cycles, EnumerationSizes) {
  const auto m = make_hypergraph_coloring(2, 3);
  EXPECT_EQ(enumerate_signatures(m, 1).size(), 1u);
  EXPECT_EQ(enumerate_signatures(m, 2).size(), 4u);
  EXPECT_EQ(enumerate_signatures(m, 3).size(), 8u);
  EXPECT_THROW(enumerate_signatures(make_naesat(3), 5), ConfigError);
}

TEST(Cycles, PoissonNullMeans) {
  const auto m = make_naesat(3);
  PoissonTestOptions o;
  o.trials = 1500;
  const std::vector<CycleSignature> ys{sig({{0, 0, 1}}), sig({{0, 0, 1}, {3, 2, 0}})};
  const auto rep = poisson_test(m, 2.0, 400, ys, o);
  for (const auto& s : rep.stats) EXPECT_LT(std::abs(s.z), 4.0) << s.signature.to_string() << " mean " << s.mean;
  EXPECT_NEAR(rep.stats[0].expected, 2.0 / 3 * m.function_prob(0), 1e-15);
}

TEST(Cycles, PlantedColoringHasNoLoops) {
  const auto m = make_hypergraph_coloring(2, 3);
  PoissonTestOptions o;
  o.trials = 200;
  o.planted = true;
  const auto rep = poisson_test(m, 2.0, 300, {sig({{0, 0, 1}}), sig({{0, 0, 1}, {0, 1, 0}})}, o);
  EXPECT_EQ(rep.stats[0].max_count, 0u);
  EXPECT_EQ(rep.stats[0].expected, 0.0);
  EXPECT_LT(std::abs(rep.stats[1].z), 4.0);
}

TEST(Cycles, Simplicity) {
  EXPECT_NEAR(simplicity_probability(1.0, 3), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(simplicity_probability(2.0, 2), std::exp(-1.0 - 1.0), 1e-15);
  const auto f = simplicity_frequency(500, 1.0, make_naesat(3), 2000, 3);
  EXPECT_NEAR(f.value, std::exp(-1.0), 4 * f.stderr + 0.01);
}

TEST(Cycles, ColoringConstants) {
  const auto c = coloring_limit_constant(3, 0.0, 5);
  ASSERT_GE(c.delta.size(), 3u);
  EXPECT_NEAR(c.delta[0], -1.0, 1e-15);
  EXPECT_NEAR(c.delta[1], 0.5, 1e-15);
  EXPECT_NEAR(c.delta[2], -0.25, 1e-15);
  EXPECT_NEAR(c.prefactor, std::sqrt(3.0), 1e-15);
  EXPECT_THROW(coloring_limit_constant(2, 1.0), ConfigError);
}

TEST(Cycles, ColoringDeltaMatchesSpectralTrace) {
  const auto m = make_hypergraph_coloring(2, 4);
  const auto c = coloring_limit_constant(4, 1.0, 4);
  for (int ell = 2; ell <= 4; ++ell) {
    CycleSignature y;
    for (int i = 0; i < ell; ++i) y.steps.push_back({0, 0, 1});
    EXPECT_NEAR(signature_constants(y, 1.0, m).delta, c.delta[static_cast<std::size_t>(ell - 1)], 1e-13);
  }
}

TEST(LimitLaw, FactorsHaveUnitMean) {
  const auto m = make_hypergraph_coloring(2, 3);
  LimitLawOptions o;
  o.trials = 4000;
  o.ell_max = 12;
  const auto rep = simulate_limit_law(m, 2.0, o);
  for (const auto& lv : rep.levels) EXPECT_NEAR(lv.mean, 1.0, 4 * lv.mean_stderr + 1e-12) << lv.ell;
  EXPECT_GT(rep.k_min, 0.0);
  EXPECT_EQ(rep.k_star_samples.size(), 4000u);
  EXPECT_LE(rep.k_star_second_truncated, rep.k_star_second_closed + 1e-12);
}

TEST(Series, ColoringPartialSumsIncrease) {
  const auto rep = delta_kappa_series(make_hypergraph_coloring(2, 3), 3.0, 30, 2);
  double prev = 0.0;
  for (const auto& t : rep.terms) {
    EXPECT_GT(t.partial, prev);
    prev = t.partial;
  }
  EXPECT_LT(prev, rep.closed_form);
}

TEST(LimitLaw, RefusesAboveKs) {
  LimitLawOptions o;
  o.trials = 10;
  EXPECT_THROW(simulate_limit_law(make_hypergraph_coloring(2, 3), 5.0, o), NumericRefusal);
}

TEST(LimitLaw, ColoringSamplesHaveUnitMean) {
  const auto s = coloring_limit_samples(3, 2.0, 20000, 10, 4);
  RunningStat st;
  for (double x : s) {
    EXPECT_GT(x, 0.0);
    st.add(x);
  }
  EXPECT_NEAR(st.mean(), 1.0, 4 * st.stderr_of_mean());
}

TEST(Series, EnumeratedMatchesSpectral) {
  for (const auto& m : {make_hypergraph_coloring(2, 3), make_hypergraph_coloring(3, 3)}) {
    const auto rep = delta_kappa_series(m, 1.0, 8, 3);
    for (const auto& t : rep.terms)
      if (!std::isnan(t.enumerated)) EXPECT_NEAR(t.enumerated, t.spectral, 1e-12) << m.name() << " ell " << t.ell;
    EXPECT_NEAR(rep.terms.back().partial, rep.closed_form, 1e-3 * std::abs(rep.closed_form) + 1e-6);
  }
}
