#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cspphase/graphs.hpp"
#include "cspphase/model.hpp"

namespace cspphase {

// Law of the root value given the values of the depth-`generations`
// variables, read from `values` (one entry per tree variable; other entries
// are ignored).
std::vector<double> root_posterior(const GWTree& tree, const ConstraintModel& model, std::span<const int> values);

struct CorrEstimate {
  double d = 0.0;
  int ell = 0;
  double value = 0.0;
  double stderr = 0.0;
  int trials = 0;
  double mean_tree_size = 0.0;
  bool positive(double z = 3.0) const { return value > z * stderr; }
};

struct CorrOptions {
  int trials = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
};

CorrEstimate corr_star(double d, const ConstraintModel& model, int ell, const CorrOptions& opts = {});

struct DrecResult {
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> capped_upper;  // min(upper, d_cond upper) when a d_cond bracket is supplied
  std::vector<CorrEstimate> curve;
};

DrecResult drec_estimate(const ConstraintModel& model, double d_lo, double d_hi, int ell, double tol_d,
                         const CorrOptions& opts = {}, std::optional<double> dcond_upper = std::nullopt);

}  // namespace cspphase
