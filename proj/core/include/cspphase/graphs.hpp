#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cspphase/model.hpp"
#include "cspphase/rng.hpp"

namespace cspphase {

// G(n, m, P). With simple = true every constraint has distinct variables and
// no two constraints share the same variable set.
FactorGraphInstance sample_null(int n, int m, const ConstraintModel& model, bool simple, Rng& rng);
int sample_m(int n, double d, int k, Rng& rng);
bool is_simple(const FactorGraphInstance& inst);

// Planted model G*(n, m, sigma): each constraint independently with
// P(tuple, psi) proportional to psi(sigma(tuple)) P(psi).
FactorGraphInstance sample_planted(int n, int m, const ConstraintModel& model, std::span<const int> sigma, Rng& rng);

// Law proportional to phi(rho_sigma)^m on Omega^n.
std::vector<int> sample_sigma_hat(int n, int m, const ConstraintModel& model, Rng& rng);
// Uniformly shuffled assignment with colour counts as equal as possible.
std::vector<int> balanced_assignment(int n, int q, Rng& rng);

// Empirical colour distribution rho_sigma.
std::vector<double> color_density(std::span<const int> sigma, int q);

struct PinResult {
  FactorGraphInstance instance;
  int theta = 0;
  std::vector<int> pinned;
};

// Pins a uniformly random set of Theta ~ U{0..theta_max} variables to a
// configuration drawn by `sampler` (an exact Boltzmann sampler of inst).
PinResult pin(const FactorGraphInstance& inst, int theta_max,
              const std::function<std::vector<int>(Rng&)>& sampler, Rng& rng);

// Galton-Watson tree T(d, P) with `generations` levels of constraints.
struct GWTree {
  int q = 0;
  int k = 0;
  int generations = 0;
  // variables in breadth-first order
  std::vector<int> var_depth;
  std::vector<int> var_first_child;  // index into constraints
  std::vector<int> var_child_count;
  // constraints in breadth-first order
  std::vector<int> con_parent;          // parent variable
  std::vector<int> con_position;        // position of the parent in the tuple
  std::vector<std::uint64_t> con_function;
  std::vector<int> con_first_child;     // k-1 consecutive variables
  std::vector<int> values;              // filled by broadcast()

  std::size_t variables() const { return var_depth.size(); }
  std::size_t constraints() const { return con_parent.size(); }
};

GWTree sample_gw_tree(double d, const ConstraintModel& model, int generations, Rng& rng,
                      std::size_t max_nodes = 20'000'000);
// Root uniform; children of each constraint drawn proportionally to psi with
// the parent coordinate fixed.
void broadcast(GWTree& tree, const ConstraintModel& model, Rng& rng);

}  // namespace cspphase
