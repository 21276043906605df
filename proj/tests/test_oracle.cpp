#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "cspphase/errors.hpp"
#include "cspphase/graphs.hpp"
#include "cspphase/oracle.hpp"
#include "test_util.hpp"

using namespace cspphase;
using cspphase::brute::brute_force;
using cspphase::brute::brute_z;
using cspphase::brute::brute_weight;

namespace {

// E[Z] and E[Z^2] over G(n, m, P) by summing over assignments, with the
// one-constraint expectation taken over all n^k tuples and all functions.
double one_constraint(int n, const ConstraintModel& model, const std::vector<int>& s, const std::vector<int>* t) {
  const int k = model.k();
  std::vector<int> vars(static_cast<std::size_t>(k), 0), a(static_cast<std::size_t>(k)), b(static_cast<std::size_t>(k));
  double total = 0.0;
  for (;;) {
    for (int i = 0; i < k; ++i) {
      a[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(vars[static_cast<std::size_t>(i)])];
      if (t) b[static_cast<std::size_t>(i)] = (*t)[static_cast<std::size_t>(vars[static_cast<std::size_t>(i)])];
    }
    for (std::uint64_t f = 0; f < model.function_count(); ++f)
      total += model.function_prob(f) * model.value(f, a) * (t ? model.value(f, b) : 1.0);
    int i = 0;
    while (i < k && ++vars[static_cast<std::size_t>(i)] == n) vars[static_cast<std::size_t>(i++)] = 0;
    if (i == k) break;
  }
  return total / std::pow(static_cast<double>(n), k);
}

double brute_first(int n, int m, const ConstraintModel& model) {
  double s = 0.0;
  brute_force(n, model.q(), [&](const std::vector<int>& x) { s += std::pow(one_constraint(n, model, x, nullptr), m); });
  return s;
}

double brute_second(int n, int m, const ConstraintModel& model) {
  double s = 0.0;
  brute_force(n, model.q(), [&](const std::vector<int>& x) {
    brute_force(n, model.q(), [&](const std::vector<int>& y) { s += std::pow(one_constraint(n, model, x, &y), m); });
  });
  return s;
}

}  // namespace

TEST(Oracle, GrayCodeVisitsEachSupportPointOnce) {
  for (const auto& model : {make_naesat(3), make_hypergraph_coloring(2, 3), soften(make_hypergraph_coloring(2, 3), 1.0)}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed);
      auto g = brute::random_instance(7, 6, model, rng);
      if (seed % 2 == 0) g.pins.push_back({3, 1});
      std::map<std::vector<int>, double> seen;
      for_each_assignment(g, model, [&](std::span<const int> s, double w) {
        std::vector<int> v(s.begin(), s.end());
        EXPECT_EQ(seen.count(v), 0u);
        seen[v] = w;
      });
      std::size_t support = 0;
      brute_force(g.n, model.q(), [&](const std::vector<int>& s) {
        const double w = brute_weight(g, model, s);
        if (w > 0) {
          ++support;
          ASSERT_EQ(seen.count(s), 1u);
          EXPECT_NEAR(seen[s], w, 1e-14);
        }
      });
      EXPECT_EQ(seen.size(), support);
    }
  }
}

TEST(Oracle, PartitionFunctionMatchesBruteForce) {
  const auto model = make_balanced_sat(3);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const auto g = brute::random_instance(9, 7, model, rng);
    const double z = brute_z(g, model);
    EXPECT_NEAR(static_cast<double>(partition_function(g, model)), z, 1e-12 * std::max(1.0, z));
    EnumerationOptions par;
    par.threads = 3;
    EXPECT_NEAR(static_cast<double>(partition_function(g, model, par)), z, 1e-12 * std::max(1.0, z));
  }
}

TEST(Oracle, SizeGuard) {
  const auto model = make_hypergraph_coloring(2, 3);
  FactorGraphInstance g;
  g.n = 20;
  EnumerationOptions o;
  o.max_states = 1000;
  EXPECT_THROW(partition_function(g, model, o), SizeGuardError);
}

TEST(Oracle, MarginalsAndSampler) {
  const auto model = make_hypergraph_coloring(2, 3);
  FactorGraphInstance g;
  g.n = 3;
  g.constraints.push_back({{0, 1}, 0});
  g.constraints.push_back({{1, 2}, 0});
  // path: 3 * 2 * 2 = 12 colourings
  const auto t = boltzmann_table(g, model);
  EXPECT_NEAR(static_cast<double>(t.z), 12.0, 1e-12);
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(t.marginals[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)], 1.0 / 3, 1e-12);
  Rng rng(4);
  std::map<std::vector<int>, int> hits;
  for (int i = 0; i < 24000; ++i) {
    const auto s = sample_boltzmann(t, rng);
    EXPECT_NE(s[0], s[1]);
    EXPECT_NE(s[1], s[2]);
    ++hits[s];
  }
  EXPECT_EQ(hits.size(), 12u);
  for (auto& [s, c] : hits) EXPECT_NEAR(c, 2000, 5 * std::sqrt(2000.0));
  for (std::uint64_t code : t.support) {
    const auto s = decode_assignment(code, 3, 3);
    EXPECT_GT(evaluate_weight(g, model, s), 0.0);
  }
}

TEST(Oracle, PairMarginalsAndEpsilon) {
  const auto model = make_hypergraph_coloring(2, 3);
  FactorGraphInstance g;
  g.n = 3;
  g.constraints.push_back({{0, 1}, 0});
  const auto pm = pair_marginals(g, model);
  const int n = 3, q = 3;
  auto at = [&](int i, int j, int a, int b) { return pm[static_cast<std::size_t>(((i * n + j) * q + a) * q + b)]; };
  EXPECT_NEAR(at(0, 1, 0, 0), 0.0, 1e-15);
  EXPECT_NEAR(at(0, 1, 0, 1), 1.0 / 6, 1e-14);
  EXPECT_NEAR(at(0, 2, 0, 1), 1.0 / 9, 1e-14);
  // only the pair (0,1) is correlated: TV distance 1/3 there
  EXPECT_NEAR(epsilon_symmetry(g, model), (1.0 / 3) / 3, 1e-12);
}

TEST(Oracle, OverlapExactMatchesMonteCarlo) {
  const auto model = make_hypergraph_coloring(2, 3);
  Rng rng(2);
  const auto g = sample_null(7, 5, model, true, rng);
  const auto t = boltzmann_table(g, model);
  const auto exact = overlap_statistic(t, 1);
  EXPECT_TRUE(exact.exact);
  const auto mc = overlap_statistic(t, 1, 100000, 1);
  EXPECT_FALSE(mc.exact);
  EXPECT_NEAR(mc.value, exact.value, 5 * mc.stderr + 1e-12);
}

TEST(Oracle, OverlapBruteForce) {
  const auto model = make_naesat(3);
  Rng rng(3);
  const auto g = brute::random_instance(5, 3, model, rng);
  const double z = brute_z(g, model);
  double expect = 0.0;
  brute_force(5, 2, [&](const std::vector<int>& s) {
    const double ws = brute_weight(g, model, s);
    if (ws == 0) return;
    brute_force(5, 2, [&](const std::vector<int>& t) {
      const double wt = brute_weight(g, model, t);
      if (wt == 0) return;
      double rho[4] = {0, 0, 0, 0};
      for (int i = 0; i < 5; ++i) rho[s[static_cast<std::size_t>(i)] * 2 + t[static_cast<std::size_t>(i)]] += 0.2;
      double tv = 0;
      for (double r : rho) tv += std::abs(r - 0.25);
      expect += ws * wt / (z * z) * tv / 2;
    });
  });
  EXPECT_NEAR(overlap_statistic(boltzmann_table(g, model), 1).value, expect, 1e-12);
}

TEST(Moments, FirstMomentMatchesBruteForce) {
  for (const auto& model : {make_naesat(3), make_hypergraph_coloring(2, 3), make_balanced_sat(3)}) {
    for (auto [n, m] : {std::pair{3, 2}, std::pair{4, 3}, std::pair{5, 2}}) {
      EXPECT_NEAR(log_first_moment_exact(n, m, model), std::log(brute_first(n, m, model)), 1e-11) << model.name();
    }
  }
}

TEST(Moments, SecondMomentMatchesBruteForce) {
  for (const auto& model : {make_naesat(3), make_hypergraph_coloring(2, 3)}) {
    for (auto [n, m] : {std::pair{3, 2}, std::pair{4, 2}}) {
      EXPECT_NEAR(log_second_moment_exact(n, m, model), std::log(brute_second(n, m, model)), 1e-11) << model.name();
    }
  }
}

TEST(Moments, AsymptoticRatioConverges) {
  const auto model = make_hypergraph_coloring(2, 3);
  double prev = 1e9;
  for (int n : {20, 40, 80, 160}) {
    const int m = static_cast<int>(std::lround(n * 1.0 / 2));
    const double r = std::abs(std::expm1(log_first_moment_exact(n, m, model) - moment_asymptotic(n, m, model).log_first));
    EXPECT_LT(r, prev) << n;
    prev = r;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(Moments, AsymptoticRefusesAboveKs) {
  const auto model = make_hypergraph_coloring(2, 3);
  EXPECT_THROW(moment_asymptotic(100, 300, model), NumericRefusal);
}

TEST(Moments, SqrtQVariantsDifferByConstant) {
  const auto model = make_naesat(3);
  const auto a = moment_asymptotic(100, 50, model);
  EXPECT_NEAR(a.log_first_sqrt_q - a.log_first, 0.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(a.log_second_sqrt_q - a.log_second, std::log(2.0), 1e-12);
}

TEST(Nishimori, PointwiseIdentity) {
  for (const auto& model : {make_naesat(3), make_hypergraph_coloring(2, 3)}) {
    const auto rep = nishimori_check(6, 3, model, 200, 7);
    EXPECT_LT(rep.max_rel_error, 1e-12) << model.name();
  }
}

TEST(Nishimori, IndependentBruteForce) {
  // both sides from first principles at n = 4, m = 2
  const auto model = make_naesat(3);
  const int n = 4, m = 2, k = 3;
  const double ez = brute_first(n, m, model);
  double sigma_norm = 0.0;
  brute_force(n, 2, [&](const std::vector<int>& s) { sigma_norm += std::pow(phi_first(model, color_density(s, 2)), m); });
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto sigma = sample_sigma_hat(n, m, model, rng);
    const auto g = sample_planted(n, m, model, sigma, rng);
    const double p_sigma = std::pow(phi_first(model, color_density(sigma, 2)), m) / sigma_norm;
    // Pr[G*(sigma) = G]: product over constraints of P(psi) psi(sigma) / sum_{tuples, psi'} ...
    std::vector<int> tuple(3);
    double planted = 1.0, null = 1.0, wsig = 1.0;
    for (const auto& c : g.constraints) {
      for (int i = 0; i < k; ++i) tuple[static_cast<std::size_t>(i)] = sigma[static_cast<std::size_t>(c.vars[static_cast<std::size_t>(i)])];
      const double w = model.function_prob(c.w) * model.value(c.w, tuple);
      planted *= w / (one_constraint(n, model, sigma, nullptr));
      null *= model.function_prob(c.w) / std::pow(static_cast<double>(n), k);
      wsig *= model.value(c.w, tuple);
    }
    planted /= std::pow(static_cast<double>(n), 3 * m);
    const double z = brute_z(g, model);
    const double lhs = p_sigma * planted;
    const double rhs = (wsig / z) * (z * null / ez);
    EXPECT_NEAR(lhs / rhs, 1.0, 1e-12);
  }
}
