#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cspphase/model.hpp"

namespace cspphase {

enum class CheckStatus { kPass, kPassSampled, kFail, kInconclusive };

const char* to_string(CheckStatus s);

struct Witness {
  std::string kind;            // e.g. "row-sum", "mu", "rho", "pos", "cycle"
  std::string description;
  std::vector<double> values;  // serialized point (mu, rho, ...) when applicable
};

struct CheckResult {
  std::string condition;
  CheckStatus status = CheckStatus::kInconclusive;
  double worst_residual = 0.0;
  std::vector<Witness> witnesses;  // non-empty whenever status == kFail
  std::vector<std::pair<std::string, double>> diagnostics;
};

struct MinOptions {
  int restarts = 32;
  int max_iterations = 4000;
  double tol = 1e-8;
  double dist_tol = 2e-2;
};

struct PosOptions {
  int trials = 10000;
  int ell_max = 12;
  int support = 8;
  int pairs = 8;
  double tol = 1e-3;
  int threads = 1;
};

CheckResult check_sym(const ConstraintModel& model, double tol = 1e-9);
CheckResult check_bal(const ConstraintModel& model, int sample_points = 200, double tol = 1e-9,
                      std::uint64_t seed = 1);
CheckResult check_min(const ConstraintModel& model, const MinOptions& opts = {}, std::uint64_t seed = 1);
CheckResult check_pos(const ConstraintModel& model, const PosOptions& opts = {}, std::uint64_t seed = 1);
CheckResult check_uni(const ConstraintModel& model, int ell_max = 8);

struct AssumptionReport {
  std::vector<CheckResult> results;  // SYM, BAL, MIN, POS, UNI
  const CheckResult& get(const std::string& condition) const;
};

struct AssumptionOptions {
  double sym_tol = 1e-9;
  int bal_points = 200;
  double bal_tol = 1e-9;
  MinOptions min;
  PosOptions pos;
  int uni_ell_max = 8;
};

AssumptionReport check_all(const ConstraintModel& model, const AssumptionOptions& opts = {},
                           std::uint64_t seed = 1);

// Helpers shared with tests.
std::vector<double> phi_gradient(const ConstraintModel& model, std::span<const double> mu);
DenseMatrix phi_hessian(const ConstraintModel& model, std::span<const double> mu);
std::vector<double> phi_second_gradient(const ConstraintModel& model, std::span<const double> rho);
// Rescale rows and columns of a positive q x q matrix to sums 1/q.
void sinkhorn_project(std::vector<double>& rho, int q, double tol = 1e-12, int max_iter = 10000);

// A finite-support distribution on the simplex: atoms with equal mass.
struct FiniteMeasure {
  int q = 0;
  std::vector<double> atoms;  // atom-major, q entries each
  std::size_t size() const { return q == 0 ? 0 : atoms.size() / static_cast<std::size_t>(q); }
  std::span<const double> atom(std::size_t i) const {
    return {atoms.data() + i * static_cast<std::size_t>(q), static_cast<std::size_t>(q)};
  }
};

// Dirichlet(1) support points closed under cyclic colour shifts (mean exactly uniform).
FiniteMeasure random_centered_measure(int q, int support, Rng& rng);

// Exact POS terms for the two families that admit closed forms:
// returns {E[(1-A)^l], E[(1-B)^l], E[(1-C)^l]}.
std::vector<double> pos_closed_form(const ConstraintModel& model, const FiniteMeasure& pi,
                                    const FiniteMeasure& pi2, int ell);

}  // namespace cspphase
