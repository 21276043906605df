#include <gtest/gtest.h>

#include <cmath>

#include "cspphase/bethe.hpp"
#include "cspphase/errors.hpp"
#include "cspphase/model.hpp"

using namespace cspphase;

namespace {

BetheOptions samples(std::uint64_t n, std::uint64_t seed = 1) {
  BetheOptions o;
  o.samples = n;
  o.seed = seed;
  return o;
}

PopulationOptions pop(std::size_t n, int sweeps, InitKind init, std::uint64_t seed = 1) {
  PopulationOptions o;
  o.size = n;
  o.sweeps = sweeps;
  o.init = init;
  o.seed = seed;
  return o;
}

// two-point NAESAT messages around 1/2
Population two_point(double a) {
  return Population::from_points(2, {{0.5 + a, 0.5 - a}, {0.5 - a, 0.5 + a}});
}

}  // namespace

TEST(Bethe, TrivialValueAtUniform) {
  const auto uni2 = Population::point_mass_uniform(2);
  const auto uni3 = Population::point_mass_uniform(3);
  for (const auto& m : {make_naesat(3), make_hypergraph_coloring(2, 3), make_balanced_sat(3)}) {
    for (double d : {0.5, 2.0}) {
      const auto e = bethe_value(d, m, m.q() == 2 ? uni2 : uni3, samples(100000));
      EXPECT_NEAR(e.value, bethe_trivial(d, m), 5 * e.stderr + 1e-12) << m.name() << " d " << d;
    }
  }
}

TEST(Bethe, ZeroDensityIsLogQ) {
  const auto m = make_hypergraph_coloring(2, 4);
  const auto e = bethe_value(0.0, m, Population::point_mass_uniform(4), samples(1000));
  EXPECT_NEAR(e.value, std::log(4.0), 1e-12);
  EXPECT_NEAR(bethe_trivial(0.0, m), std::log(4.0), 1e-15);
}

TEST(Bethe, GapAtUniformIsZero) {
  const auto m = make_naesat(3);
  const auto e = bethe_gap(3.0, m, Population::point_mass_uniform(2), samples(20000));
  EXPECT_NEAR(e.value, 0.0, 1e-12);
}

TEST(Bethe, NaesatScalarMatchesGeneric) {
  const double a = 0.3;
  const std::vector<double> pi{0.5 + a, 0.5 - a};
  const auto scalar = naesat_bethe(3.0, 3, pi, samples(400000, 3));
  const auto generic = bethe_value(3.0, make_naesat(3), two_point(a), samples(400000, 4));
  EXPECT_NEAR(scalar.value, generic.value, 4 * std::hypot(scalar.stderr, generic.stderr));
  const auto uniform = naesat_bethe(2.0, 3, std::vector<double>{0.5}, samples(100000));
  EXPECT_NEAR(uniform.value, bethe_trivial(2.0, make_naesat(3)), 5 * uniform.stderr + 1e-12);
}

TEST(Bethe, GapAgreesWithValueMinusTrivial) {
  const auto m = make_naesat(3);
  const double d = 5.0;
  const auto p = two_point(0.35);
  const auto v = bethe_value(d, m, p, samples(1000000, 5));
  const auto g = bethe_gap(d, m, p, samples(1000000, 6));
  EXPECT_NEAR(v.value - bethe_trivial(d, m), g.value, 4 * std::hypot(v.stderr, g.stderr));
}

TEST(Bethe, MeanConstraintEnforced) {
  const auto bad = Population::from_points(2, {{0.9, 0.1}, {0.6, 0.4}});
  EXPECT_THROW(bethe_value(1.0, make_naesat(3), bad, samples(100)), ConfigError);
  EXPECT_THROW(bethe_gap(1.0, make_naesat(3), bad, samples(100)), ConfigError);
  EXPECT_THROW(naesat_bethe(1.0, 3, std::vector<double>{0.9}, samples(100)), ConfigError);
  EXPECT_THROW(Population::from_points(2, {{0.7, 0.2}}), ConfigError);
}

TEST(Bethe, GaugeInvariance) {
  // relabelling the colours of a colour-symmetric model leaves B unchanged
  const auto m = make_hypergraph_coloring(2, 3);
  auto p = Population::from_points(3, {{0.6, 0.3, 0.1}, {0.1, 0.6, 0.3}, {0.3, 0.1, 0.6}});
  const auto a = bethe_value(2.0, m, p, samples(50000, 9));
  const std::vector<int> perm{2, 0, 1};
  p.permute_colors(perm);
  const auto b = bethe_value(2.0, m, p, samples(50000, 9));
  EXPECT_NEAR(a.value, b.value, 5 * std::hypot(a.stderr, b.stderr));
}

TEST(Population, AnchoredMeanIsUniform) {
  const auto m = make_hypergraph_coloring(2, 3);
  const auto p = population_dynamics(3.0, m, pop(2000, 10, InitKind::kRandom));
  EXPECT_LT(p.mean_deviation(), 1e-12);
  EXPECT_EQ(p.expanded().size(), p.size() * 3);
  EXPECT_LT(p.expanded().mean_deviation(), 1e-12);
}

TEST(Population, UniformIsFixedPoint) {
  const auto m = make_naesat(3);
  const auto p = population_dynamics(4.0, m, pop(1000, 5, InitKind::kUniform));
  for (std::size_t i = 0; i < p.size(); ++i)
    for (double x : p.point(i)) EXPECT_NEAR(x, 0.5, 1e-12);
}

TEST(Population, DeterministicAndThreadIndependent) {
  const auto m = make_naesat(3);
  auto o = pop(3000, 8, InitKind::kPlantedBias, 42);
  const auto a = population_dynamics(4.0, m, o);
  const auto b = population_dynamics(4.0, m, o);
  o.threads = 3;
  const auto c = population_dynamics(4.0, m, o);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int w = 0; w < 2; ++w) {
      EXPECT_EQ(a.point(i)[static_cast<std::size_t>(w)], b.point(i)[static_cast<std::size_t>(w)]);
      EXPECT_EQ(a.point(i)[static_cast<std::size_t>(w)], c.point(i)[static_cast<std::size_t>(w)]);
    }
  BetheOptions s1 = samples(40000, 2), s3 = s1;
  s3.threads = 3;
  EXPECT_EQ(bethe_gap(4.0, m, a, s1).value, bethe_gap(4.0, m, a, s3).value);
  EXPECT_EQ(bethe_value(4.0, m, a, s1).value, bethe_value(4.0, m, a, s3).value);
}

TEST(Population, RejectsTinyPopulations) {
  EXPECT_THROW(population_dynamics(1.0, make_naesat(3), pop(10, 1, InitKind::kRandom)), ConfigError);
}

TEST(Dcond, GapSignsFarFromThreshold) {
  const auto m = make_hypergraph_coloring(2, 3);
  DcondOptions o;
  o.population = pop(5000, 40, InitKind::kPlantedBias, 3);
  o.samples = 100000;
  o.seeds = 1;
  o.inits = {InitKind::kPlantedBias};
  const auto hi = gap_at(7.0, m, o);
  EXPECT_TRUE(hi.positive) << hi.gap << " +- " << hi.stderr;
  const auto lo = gap_at(1.5, m, o);
  EXPECT_FALSE(lo.positive) << lo.gap << " +- " << lo.stderr;
  EXPECT_LT(std::abs(lo.gap), 0.01);
}

TEST(Dcond, BracketMustStraddle) {
  const auto m = make_hypergraph_coloring(2, 3);
  DcondOptions o;
  o.population = pop(2000, 10, InitKind::kPlantedBias);
  o.samples = 20000;
  o.seeds = 1;
  EXPECT_THROW(dcond_estimate(m, 0.5, 1.0, o), ConfigError);
  EXPECT_THROW(dcond_estimate(m, 2.0, 1.0, o), ConfigError);
}

TEST(InitKind, RoundTrip) {
  for (InitKind k : {InitKind::kUniform, InitKind::kPlantedBias, InitKind::kRandom})
    EXPECT_EQ(init_from_string(to_string(k)), k);
  EXPECT_THROW(init_from_string("nope"), ConfigError);
}
