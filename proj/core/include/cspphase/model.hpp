#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cspphase/dense.hpp"
#include "cspphase/rng.hpp"

namespace cspphase {

// A weight function psi: Omega^k -> [0,1] stored densely. Tuples are indexed
// lexicographically with the last coordinate varying fastest.
class WeightTable {
 public:
  WeightTable() = default;
  WeightTable(int q, int k, std::vector<double> values);

  int q() const { return q_; }
  int k() const { return k_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t index) const { return values_[index]; }
  double at(std::span<const int> tuple) const { return values_[index_of(tuple, q_)]; }
  std::span<const double> values() const { return values_; }

  // sum over tuples with tuple[position] == value
  double row_sum(int position, int value) const;
  double mean() const;

  static std::size_t index_of(std::span<const int> tuple, int q);
  static void tuple_of(std::size_t index, int q, std::span<int> out);

  bool operator==(const WeightTable&) const = default;

 private:
  int q_ = 0;
  int k_ = 0;
  std::vector<double> values_;
};

std::size_t ipow(std::size_t base, int exp);

struct WeightEntry {
  WeightTable table;
  double prob = 0.0;
};

// How the full weight family is generated from the stored base tables.
//   kExplicit: the stored list is the family.
//   kSignPermutation: (q = 2 only) each base table b generates
//     psi_{tau,theta}(s) = b(s_theta(1) ^ tau_1, ..., s_theta(k) ^ tau_k)
//     for all sign masks tau and coordinate permutations theta, uniformly.
enum class Closure { kExplicit, kSignPermutation };

enum class Family { kCustom, kNaesat, kColoring, kBalancedSat, kParityMajority, kKsat };

// Walker alias table over a finite distribution.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);
  std::size_t sample(Rng& rng) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

// The pair (Omega, P): domain size q, arity k, and a distribution over weight
// functions. Function indices are 64-bit because closures can be large.
class ConstraintModel {
 public:
  ConstraintModel(int q, int k, std::vector<WeightEntry> weights, std::string name = "custom",
                  Closure closure = Closure::kExplicit);

  int q() const { return q_; }
  int k() const { return k_; }
  const std::string& name() const { return name_; }
  Closure closure() const { return closure_; }
  Family family() const { return family_; }
  bool softened() const { return softened_; }
  const std::vector<WeightEntry>& base() const { return weights_; }

  std::uint64_t function_count() const { return function_count_; }
  double function_prob(std::uint64_t f) const;
  double value(std::uint64_t f, std::span<const int> tuple) const;
  double value_at(std::uint64_t f, std::size_t flat_index) const;
  WeightTable materialize(std::uint64_t f) const;
  std::uint64_t sample_function(Rng& rng) const;

  // xi = q^-k sum_s E[Psi(s)]
  double xi() const { return xi_; }
  // E[Psi(s)] for every tuple s (length q^k).
  const std::vector<double>& expected_table() const { return expected_; }
  // E[Psi(s) Psi(t)] over (s, t), row-major q^k x q^k. Computed on demand.
  const std::vector<double>& pair_expectation() const;

  // Distribution of Phi_{psi,1,2} over psi ~ P, as (weight, matrix) pairs.
  const std::vector<std::pair<double, DenseMatrix>>& phi_orbit() const;

  // Invariant under every permutation of the colours.
  bool color_symmetric() const { return color_symmetric_; }

  std::uint64_t hash() const;

  // Metadata set by the builders.
  void set_family(Family f) { family_ = f; }
  void set_softened(double beta) {
    softened_ = true;
    beta_ = beta;
  }
  double beta() const { return beta_; }
  void set_parameter(int p) { parameter_ = p; }
  int parameter() const { return parameter_; }

 private:
  void decode(std::uint64_t f, std::size_t& base, std::vector<int>& perm, std::uint64_t& mask) const;
  std::size_t mapped_index(std::span<const int> tuple, const std::vector<int>& perm, std::uint64_t mask) const;
  bool compute_color_symmetry() const;

  int q_;
  int k_;
  std::vector<WeightEntry> weights_;
  std::string name_;
  Closure closure_;
  Family family_ = Family::kCustom;
  bool softened_ = false;
  double beta_ = 0.0;
  int parameter_ = 0;
  std::uint64_t function_count_ = 0;
  std::uint64_t perm_count_ = 1;
  double xi_ = 0.0;
  std::vector<double> expected_;
  AliasTable base_sampler_;
  bool color_symmetric_ = false;
  mutable std::optional<std::vector<double>> pair_expectation_;
  mutable std::optional<std::vector<std::pair<double, DenseMatrix>>> phi_orbit_;
};

// phi(mu) = sum_s E[Psi(s)] prod_i mu(s_i) on the simplex.
double phi_first(const ConstraintModel& model, std::span<const double> mu);
// bar-phi(rho) for a q x q matrix rho (row-major).
double phi_second(const ConstraintModel& model, std::span<const double> rho);

// ---------------------------------------------------------------------------
// Built-in families.

ConstraintModel make_naesat(int k);
// allow_degenerate admits (k, q) = (2, 2), which violates the model hypotheses.
ConstraintModel make_hypergraph_coloring(int k, int q, bool allow_degenerate = false);
double balanced_sat_lambda(int k);
ConstraintModel make_balanced_sat(int k);
// Arity 2k, k odd. expand materialises all 2^{2k} (2k)! functions (2k <= 6 only).
ConstraintModel make_parity_majority(int k, bool expand = false);
// Plain k-SAT; not balanced, kept as a negative fixture.
ConstraintModel make_ksat(int k);
ConstraintModel soften(const ConstraintModel& model, double beta);

// Parity-majority helpers.
double parity_majority_f(int k, double r);
double parity_majority_g(int k, double r);
double parity_majority_phi_bar(int k, double r);

// ---------------------------------------------------------------------------
// Instances.

struct Constraint {
  std::vector<int> vars;
  std::uint64_t w = 0;
};

struct Pin {
  int var;
  int value;
};

struct FactorGraphInstance {
  int n = 0;
  std::vector<Constraint> constraints;
  std::vector<Pin> pins;

  std::size_t m() const { return constraints.size(); }
};

void validate_instance(const FactorGraphInstance& inst, const ConstraintModel& model);
double evaluate_weight(const FactorGraphInstance& inst, const ConstraintModel& model,
                       std::span<const int> sigma);

// ---------------------------------------------------------------------------
// JSON interchange: {"q","k","weights":[{"prob","table"}]} and
// {"n","constraints":[{"vars","w"}]}.

ConstraintModel model_from_json(const std::string& text);
std::string model_to_json(const ConstraintModel& model);
FactorGraphInstance instance_from_json(const std::string& text);
std::string instance_to_json(const FactorGraphInstance& inst);

}  // namespace cspphase
