#include <gtest/gtest.h>

#include <cmath>

#include "cspphase/assumptions.hpp"
#include "cspphase/model.hpp"

using namespace cspphase;

namespace {

bool passes(CheckStatus s) { return s == CheckStatus::kPass || s == CheckStatus::kPassSampled; }

AssumptionOptions quick() {
  AssumptionOptions o;
  o.bal_points = 50;
  o.min.restarts = 8;
  o.pos.trials = 500;
  return o;
}

}  // namespace

TEST(Assumptions, KsatFailsSym) {
  const auto r = check_sym(make_ksat(3));
  EXPECT_EQ(r.status, CheckStatus::kFail);
  EXPECT_FALSE(r.witnesses.empty());
}

TEST(Assumptions, NaesatPassesAll) {
  const auto rep = check_all(make_naesat(3), quick());
  for (const auto& c : rep.results) EXPECT_TRUE(passes(c.status)) << c.condition;
}

TEST(Assumptions, ColoringPassesAll) {
  const auto rep = check_all(make_hypergraph_coloring(2, 3), quick());
  for (const auto& c : rep.results) EXPECT_TRUE(passes(c.status)) << c.condition;
}

TEST(Assumptions, BalancedSatCoreConditions) {
  const auto rep = check_all(make_balanced_sat(3), quick());
  for (const char* c : {"SYM", "BAL", "MIN", "UNI"}) EXPECT_TRUE(passes(rep.get(c).status)) << c;
}

TEST(Assumptions, UnbalancedTableFailsBal) {
  // a single table favouring colour 0 everywhere
  std::vector<double> v{1.0, 0.5, 0.5, 0.2};
  ConstraintModel m(2, 2, {{WeightTable(2, 2, v), 1.0}});
  const auto r = check_bal(m);
  EXPECT_EQ(r.status, CheckStatus::kFail);
  EXPECT_FALSE(r.witnesses.empty());
}

TEST(Assumptions, GradientMatchesFiniteDifference) {
  const auto m = make_balanced_sat(3);
  std::vector<double> mu{0.3, 0.7};
  const auto g = phi_gradient(m, mu);
  const double h = 1e-6;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    auto up = mu, dn = mu;
    up[i] += h;
    dn[i] -= h;
    EXPECT_NEAR(g[i], (phi_first(m, up) - phi_first(m, dn)) / (2 * h), 1e-7);
  }
  const auto hess = phi_hessian(m, mu);
  for (std::size_t i = 0; i < 2; ++i) {
    auto up = mu, dn = mu;
    up[i] += h;
    dn[i] -= h;
    const auto gu = phi_gradient(m, up), gd = phi_gradient(m, dn);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(hess(j, i), (gu[j] - gd[j]) / (2 * h), 1e-6);
  }
}

TEST(Assumptions, SecondGradientMatchesFiniteDifference) {
  const auto m = make_hypergraph_coloring(2, 3);
  std::vector<double> rho{0.2, 0.05, 0.1, 0.03, 0.15, 0.12, 0.09, 0.11, 0.15};
  const auto g = phi_second_gradient(m, rho);
  const double h = 1e-6;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    auto up = rho, dn = rho;
    up[i] += h;
    dn[i] -= h;
    EXPECT_NEAR(g[i], (phi_second(m, up) - phi_second(m, dn)) / (2 * h), 1e-7);
  }
}

TEST(Assumptions, SinkhornProducesUniformMarginals) {
  Rng rng(3);
  const int q = 4;
  std::vector<double> rho(16);
  for (auto& x : rho) x = 0.01 + rng.uniform();
  sinkhorn_project(rho, q);
  for (int a = 0; a < q; ++a) {
    double r = 0.0, c = 0.0;
    for (int b = 0; b < q; ++b) {
      r += rho[static_cast<std::size_t>(a * q + b)];
      c += rho[static_cast<std::size_t>(b * q + a)];
    }
    EXPECT_NEAR(r, 0.25, 1e-11);
    EXPECT_NEAR(c, 0.25, 1e-11);
  }
}

TEST(Assumptions, CenteredMeasureHasUniformMean) {
  Rng rng(11);
  const auto pi = random_centered_measure(3, 4, rng);
  ASSERT_EQ(pi.size() % 3, 0u);
  std::vector<double> mean(3, 0.0);
  for (std::size_t i = 0; i < pi.size(); ++i)
    for (int w = 0; w < 3; ++w) mean[static_cast<std::size_t>(w)] += pi.atom(i)[static_cast<std::size_t>(w)] / pi.size();
  for (double x : mean) EXPECT_NEAR(x, 1.0 / 3, 1e-12);
}

TEST(Assumptions, SofteningPreservesStatus) {
  for (double beta : {0.5, 2.0}) {
    const auto rep = check_all(soften(make_naesat(3), beta), quick());
    for (const auto& c : rep.results) EXPECT_TRUE(passes(c.status)) << c.condition << " beta " << beta;
  }
}
