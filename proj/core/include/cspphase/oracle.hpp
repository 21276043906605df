#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cspphase/model.hpp"
#include "cspphase/rng.hpp"
#include "cspphase/stats.hpp"

namespace cspphase {

struct EnumerationOptions {
  std::uint64_t max_states = 20'000'000;
  int threads = 1;
};

// Visits every assignment with positive weight exactly once, in reflected
// Gray-code order within each chunk.
void for_each_assignment(const FactorGraphInstance& inst, const ConstraintModel& model,
                         const std::function<void(std::span<const int>, double)>& visit,
                         const EnumerationOptions& opts = {});

long double partition_function(const FactorGraphInstance& inst, const ConstraintModel& model,
                               const EnumerationOptions& opts = {});

struct BoltzmannTable {
  int n = 0;
  int q = 0;
  long double z = 0.0L;
  std::vector<std::vector<double>> marginals;  // n x q
  std::vector<std::uint64_t> support;          // assignment codes (base q, var 0 least significant)
  std::vector<double> cumulative;              // running totals over `support`
};

BoltzmannTable boltzmann_table(const FactorGraphInstance& inst, const ConstraintModel& model,
                               const EnumerationOptions& opts = {});
std::vector<int> decode_assignment(std::uint64_t code, int n, int q);
std::vector<int> sample_boltzmann(const BoltzmannTable& table, Rng& rng);

// mu_{ij}(a, b) for all i, j: index ((i * n + j) * q + a) * q + b.
std::vector<double> pair_marginals(const FactorGraphInstance& inst, const ConstraintModel& model,
                                   const EnumerationOptions& opts = {});

// (2 / (n (n-1))) sum_{i<j} || mu_ij - mu_i (x) mu_j ||_TV
double epsilon_symmetry(const FactorGraphInstance& inst, const ConstraintModel& model,
                        const EnumerationOptions& opts = {});

struct OverlapResult {
  double value = 0.0;
  double stderr = 0.0;
  bool exact = false;
};

// E_{sigma, tau ~ mu_G} || rho_{sigma,tau} - uniform ||_TV. Exact when the
// support is small enough, otherwise Monte Carlo over exact samples.
OverlapResult overlap_statistic(const BoltzmannTable& table, std::uint64_t seed, std::size_t mc_pairs = 200000,
                                std::uint64_t exact_pair_limit = 20'000'000);

// ---------------------------------------------------------------------------
// Moments of Z(G(n, m, P)) on the non-simple model.

double log_first_moment_exact(int n, int m, const ConstraintModel& model);
double log_second_moment_exact(int n, int m, const ConstraintModel& model);

// log_first = n ln q + m ln xi - 1/2 sum ln(1 - d(k-1) lambda), which is what
// the composition sum converges to. The *_sqrt_q variants carry the extra
// factor q^{1/2} (resp. q) of the q^{n+1/2} normalisation.
struct AsymptoticMoments {
  double d = 0.0;
  double log_first = 0.0;
  double log_second = 0.0;
  double log_first_sqrt_q = 0.0;
  double log_second_sqrt_q = 0.0;
  double first_product = 1.0;   // prod over Eig(Phi)\{1} of (1 - d(k-1) lambda)^{-1/2}
  double second_product = 1.0;  // prod over Eig'(Xi) of (1 - d(k-1) lambda)^{-1/2}
};

AsymptoticMoments moment_asymptotic(int n, int m, const ConstraintModel& model);

// ---------------------------------------------------------------------------

struct NishimoriTrial {
  double log_lhs;  // Pr[Sigma_hat = sigma] Pr[G*(sigma) = G]
  double log_rhs;  // mu_G(sigma) Pr[G_hat = G]
  double rel_error;
};

struct NishimoriReport {
  std::vector<NishimoriTrial> trials;
  double max_rel_error = 0.0;
};

NishimoriReport nishimori_check(int n, int m, const ConstraintModel& model, int trials, std::uint64_t seed);

}  // namespace cspphase
