#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <vector>

#include "cspphase/errors.hpp"
#include "cspphase/model.hpp"

namespace cspphase {

namespace {

std::vector<int> bits_of(std::size_t idx, int k) {
  std::vector<int> t(static_cast<std::size_t>(k));
  WeightTable::tuple_of(idx, 2, t);
  return t;
}

}  // namespace

ConstraintModel make_naesat(int k) {
  if (k < 2) throw ConfigError("naesat: k must be at least 2");
  const std::size_t cells = ipow(2, k);
  std::vector<WeightEntry> weights;
  for (std::size_t tau = 0; tau < cells; ++tau) {
    std::vector<double> v(cells, 1.0);
    v[tau] = 0.0;
    v[(cells - 1) ^ tau] = 0.0;
    weights.push_back({WeightTable(2, k, std::move(v)), 1.0 / static_cast<double>(cells)});
  }
  ConstraintModel m(2, k, std::move(weights), "naesat(k=" + std::to_string(k) + ")");
  m.set_family(Family::kNaesat);
  m.set_parameter(k);
  return m;
}

ConstraintModel make_hypergraph_coloring(int k, int q, bool allow_degenerate) {
  if (k < 2 || q < 2) throw ConfigError("coloring: need k >= 2 and q >= 2");
  if (k == 2 && q == 2 && !allow_degenerate) throw ConfigError("coloring: (k, q) = (2, 2) is excluded");
  const std::size_t cells = ipow(static_cast<std::size_t>(q), k);
  std::vector<double> v(cells, 1.0);
  std::vector<int> tuple(static_cast<std::size_t>(k));
  for (int c = 0; c < q; ++c) {
    std::fill(tuple.begin(), tuple.end(), c);
    v[WeightTable::index_of(tuple, q)] = 0.0;
  }
  std::vector<WeightEntry> weights{{WeightTable(q, k, std::move(v)), 1.0}};
  ConstraintModel m(q, k, std::move(weights),
                    "coloring(k=" + std::to_string(k) + ",q=" + std::to_string(q) + ")");
  m.set_family(Family::kColoring);
  m.set_parameter(k);
  return m;
}

double balanced_sat_lambda(int k) {
  if (k < 3) throw ConfigError("balanced sat: k must be at least 3");
  auto h = [k](double l) { return (1.0 - l) * std::pow(1.0 + l, k - 1) - 1.0; };
  // h > 0 just right of 0 (slope k - 2) and h(1) = -1.
  double lo = 1e-9, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ConstraintModel make_balanced_sat(int k) {
  const double lambda = balanced_sat_lambda(k);
  const std::size_t cells = ipow(2, k);
  std::vector<WeightEntry> weights;
  for (std::size_t tau = 0; tau < cells; ++tau) {
    std::vector<double> v(cells);
    for (std::size_t s = 0; s < cells; ++s) {
      // literal j is true iff s_j == tau_j; the clause fails iff none is.
      const int agree = k - std::popcount(s ^ tau);
      v[s] = agree == 0 ? 0.0 : std::pow(lambda, agree);
    }
    weights.push_back({WeightTable(2, k, std::move(v)), 1.0 / static_cast<double>(cells)});
  }
  ConstraintModel m(2, k, std::move(weights), "balanced-sat(k=" + std::to_string(k) + ")");
  m.set_family(Family::kBalancedSat);
  m.set_parameter(k);
  return m;
}

ConstraintModel make_ksat(int k) {
  if (k < 2) throw ConfigError("ksat: k must be at least 2");
  const std::size_t cells = ipow(2, k);
  std::vector<WeightEntry> weights;
  for (std::size_t tau = 0; tau < cells; ++tau) {
    std::vector<double> v(cells, 1.0);
    v[(cells - 1) ^ tau] = 0.0;
    weights.push_back({WeightTable(2, k, std::move(v)), 1.0 / static_cast<double>(cells)});
  }
  ConstraintModel m(2, k, std::move(weights), "ksat(k=" + std::to_string(k) + ")");
  m.set_family(Family::kKsat);
  m.set_parameter(k);
  return m;
}

namespace {

// Value 0 is spin +1 and value 1 is spin -1.
double parity_majority_canonical(const std::vector<int>& s, int k) {
  int ones_parity = 0;
  for (int i = 0; i < k; ++i) ones_parity ^= s[static_cast<std::size_t>(i)];
  int minus = 0;
  for (int i = k; i < 2 * k; ++i) minus += s[static_cast<std::size_t>(i)];
  const bool product_plus = ones_parity == 0;
  const bool sum_negative = 2 * minus > k;
  return (product_plus && sum_negative) || (!product_plus && !sum_negative) ? 1.0 : 0.0;
}

}  // namespace

ConstraintModel make_parity_majority(int k, bool expand) {
  if (k < 3 || k % 2 == 0) throw ConfigError("parity-majority: k must be odd and at least 3");
  const int arity = 2 * k;
  const std::size_t cells = ipow(2, arity);
  std::vector<double> v(cells);
  for (std::size_t s = 0; s < cells; ++s) v[s] = parity_majority_canonical(bits_of(s, arity), k);
  std::vector<WeightEntry> weights{{WeightTable(2, arity, std::move(v)), 1.0}};
  const std::string name = "parity-majority(k=" + std::to_string(k) + ")";
  ConstraintModel reduced(2, arity, std::move(weights), name, Closure::kSignPermutation);
  reduced.set_family(Family::kParityMajority);
  reduced.set_parameter(k);
  if (!expand) return reduced;
  if (arity > 6) throw SizeGuardError("parity-majority: explicit expansion only for 2k <= 6");
  std::vector<WeightEntry> all;
  const double p = 1.0 / static_cast<double>(reduced.function_count());
  all.reserve(reduced.function_count());
  for (std::uint64_t f = 0; f < reduced.function_count(); ++f) all.push_back({reduced.materialize(f), p});
  ConstraintModel m(2, arity, std::move(all), name + "[expanded]");
  m.set_family(Family::kParityMajority);
  m.set_parameter(k);
  return m;
}

ConstraintModel soften(const ConstraintModel& model, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("soften: beta must be finite and non-negative");
  const double floor = std::exp(-beta);
  std::vector<WeightEntry> weights;
  for (const auto& w : model.base()) {
    std::vector<double> v(w.table.values().begin(), w.table.values().end());
    for (double& x : v) x = floor + (1.0 - floor) * x;
    weights.push_back({WeightTable(model.q(), model.k(), std::move(v)), w.prob});
  }
  ConstraintModel m(model.q(), model.k(), std::move(weights),
                    model.name() + "+soft(beta=" + std::to_string(beta) + ")", model.closure());
  m.set_family(model.family());
  m.set_parameter(model.parameter());
  m.set_softened(beta);
  return m;
}

double parity_majority_f(int k, double r) { return 0.25 * (1.0 - std::pow(1.0 - 2.0 * r, k)); }

double parity_majority_g(int k, double r) {
  const std::size_t cells = ipow(2, k);
  std::vector<double> by_agree(static_cast<std::size_t>(k) + 1, 0.0);
  for (std::size_t s = 0; s < cells; ++s) {
    if (2 * std::popcount(s) <= k) continue;
    for (std::size_t t = 0; t < cells; ++t) {
      if (2 * std::popcount(t) <= k) continue;
      by_agree[static_cast<std::size_t>(k - std::popcount(s ^ t))] += 1.0;
    }
  }
  double g = 0.0;
  for (int j = 0; j <= k; ++j) g += by_agree[static_cast<std::size_t>(j)] * std::pow(r, j) * std::pow(1.0 - r, k - j);
  return g / static_cast<double>(cells);
}

double parity_majority_phi_bar(int k, double r) {
  return 2.0 * (parity_majority_f(k, r) * parity_majority_g(k, r) +
                parity_majority_f(k, 1.0 - r) * parity_majority_g(k, 1.0 - r));
}

}  // namespace cspphase
