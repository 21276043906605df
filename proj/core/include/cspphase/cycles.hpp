#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cspphase/dense.hpp"
#include "cspphase/model.hpp"
#include "cspphase/rng.hpp"

namespace cspphase {

// Positions are 0-based.
struct CycleStep {
  std::uint64_t w = 0;
  int s = 0;
  int t = 1;
  bool operator==(const CycleStep&) const = default;
};

struct CycleSignature {
  std::vector<CycleStep> steps;
  int order() const { return static_cast<int>(steps.size()); }
  std::string to_string() const;
  bool operator==(const CycleSignature&) const = default;
};

void validate_signature(const CycleSignature& y, const ConstraintModel& model);

struct CycleConstants {
  double kappa = 0.0;
  double kappa_hat = 0.0;
  double delta = 0.0;
  double trace = 0.0;
  DenseMatrix phi;
};

// kappa for order 1 is (d/k) P(psi): order-1 cycles carry no rotation or
// reflection symmetry. Higher orders use (d/k)^l prod P(psi_i) / (2l).
CycleConstants signature_constants(const CycleSignature& y, double d, const ConstraintModel& model);

// Every signature of order ell; explicit models only, ell <= 4.
std::vector<CycleSignature> enumerate_signatures(const ConstraintModel& model, int ell,
                                                 std::size_t limit = 1'000'000);

std::uint64_t count_cycles(const FactorGraphInstance& inst, const CycleSignature& y);
// Counts for several signatures in one pass over the incidence lists.
std::vector<std::uint64_t> count_cycles(const FactorGraphInstance& inst, const std::vector<CycleSignature>& ys);

struct PoissonTestOptions {
  int trials = 2000;
  bool planted = false;
  bool simple = false;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct SignatureStats {
  CycleSignature signature;
  double expected = 0.0;  // kappa (null) or kappa_hat (planted)
  double mean = 0.0;
  double stderr = 0.0;
  double z = 0.0;
  double chi2 = 0.0;  // dispersion statistic, ~ chi2(trials - 1) under Poisson
  std::uint64_t max_count = 0;
};

struct PoissonReport {
  int n = 0;
  double d = 0.0;
  int trials = 0;
  bool planted = false;
  std::vector<SignatureStats> stats;
  // covariance[i * s + j] with its standard error
  std::vector<double> covariance;
  std::vector<double> covariance_stderr;
};

PoissonReport poisson_test(const ConstraintModel& model, double d, int n, const std::vector<CycleSignature>& ys,
                           const PoissonTestOptions& opts);

// Pr[G(n, m) simple] -> exp(-d(k-1)/2 - 1{k=2} d^2/4).
double simplicity_probability(double d, int k);
struct FrequencyEstimate {
  double value;
  double stderr;
  int trials;
};
FrequencyEstimate simplicity_frequency(int n, double d, const ConstraintModel& model, int trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Limiting law of Z / E[Z].

struct LimitLawOptions {
  int trials = 10000;
  int ell_max = 40;
  std::uint64_t seed = 1;
  int threads = 1;
  std::uint64_t work_limit = 200'000'000;  // matrix products per run
};

struct LevelStats {
  int ell;
  double mu;            // (d(k-1))^ell / (2 ell)
  double trace_mean;    // Tr(Phi^ell)
  double mean;          // empirical mean of the factor
  double mean_stderr;
  double second;        // empirical second moment
  double second_stderr;
  double second_predicted;  // exp(mu sum_{Eig[Xi]} lambda^ell)
  bool in_k;            // random part included in K (not only in K*)
};

struct LimitLawReport {
  double d = 0.0;
  int ell_max = 0;
  bool deterministic_traces = false;
  std::vector<double> k_samples;       // K
  std::vector<double> k_star_samples;  // K*
  std::vector<LevelStats> levels;
  double k_min = 0.0;
  double k_star_second = 0.0;
  double k_star_second_stderr = 0.0;
  double k_star_second_truncated = 0.0;  // exp(sum_{ell <= ell_max} mu_ell sum lambda^ell)
  double k_star_second_closed = 0.0;     // exp(-1/2 sum ln(1 - d(k-1) lambda))
  double tail_bound = 0.0;               // closed - truncated, in log space
};

LimitLawReport simulate_limit_law(const ConstraintModel& model, double d, const LimitLawOptions& opts);

struct SeriesTerm {
  int ell;
  double enumerated;  // sum over signatures of order ell of delta^2 kappa; NaN if not enumerated
  double spectral;    // mu_ell sum_{Eig[Xi]} lambda^ell
  double partial;     // running sum of spectral
};
struct SeriesReport {
  std::vector<SeriesTerm> terms;
  double closed_form;  // -1/2 sum ln(1 - d(k-1) lambda)
};
SeriesReport delta_kappa_series(const ConstraintModel& model, double d, int ell_max, int enumerate_up_to = 3);

// Graph colouring specialisation.
struct ColoringConstant {
  double prefactor;
  std::vector<double> delta;  // delta[ell - 1]
};
ColoringConstant coloring_limit_constant(int q, double d, int ell_max = 10);
// Samples prod_{ell >= 3} (1 + delta_ell)^{K_ell} exp(-mu_ell delta_ell), K_ell ~ Po(d^ell / (2 ell)).
std::vector<double> coloring_limit_samples(int q, double d, int trials, int ell_max, std::uint64_t seed);

}  // namespace cspphase
