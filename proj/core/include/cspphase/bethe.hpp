#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cspphase/model.hpp"
#include "cspphase/rng.hpp"
#include "cspphase/stats.hpp"

namespace cspphase {

// A measure pi on the simplex, represented by N points.
//
// anchored: every stored point is the message of a colour-0 vertex and pi is
// the uniform mixture of all cyclic colour shifts of the stored points. The
// mean of pi is then exactly uniform. Otherwise pi is the (weighted) empirical
// measure of the points.
class Population {
 public:
  Population() = default;
  Population(int q, std::size_t n);

  static Population point_mass_uniform(int q, std::size_t n = 1);
  // Finite-support measure; empty weights means uniform weights.
  static Population from_points(int q, const std::vector<std::vector<double>>& points,
                                std::vector<double> weights = {});
  // Recovers the anchored representation's full support (N q points).
  Population expanded() const;

  int q() const { return q_; }
  std::size_t size() const { return size_; }
  bool anchored() const { return anchored_; }
  void set_anchored(bool a) { anchored_ = a; }
  std::span<double> point(std::size_t i) { return {points_.data() + i * static_cast<std::size_t>(q_), static_cast<std::size_t>(q_)}; }
  std::span<const double> point(std::size_t i) const {
    return {points_.data() + i * static_cast<std::size_t>(q_), static_cast<std::size_t>(q_)};
  }
  std::vector<int>& colors() { return colors_; }
  const std::vector<int>& colors() const { return colors_; }
  const std::vector<double>& weights() const { return weights_; }

  std::vector<double> mean() const;
  // max_w |mean(w) - 1/q|
  double mean_deviation() const;
  // Draws one point of pi into out.
  void sample(Rng& rng, std::span<double> out) const;
  // Applies a colour permutation to every point.
  void permute_colors(std::span<const int> perm);

  std::uint64_t zero_redraws = 0;

 private:
  int q_ = 0;
  std::size_t size_ = 0;
  bool anchored_ = false;
  std::vector<double> points_;
  std::vector<int> colors_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

struct BetheEstimate {
  double value = 0.0;
  double stderr = 0.0;
  std::uint64_t samples = 0;
  double d = 0.0;
  std::string model;
};

double bethe_trivial(double d, const ConstraintModel& model);

struct BetheOptions {
  std::uint64_t samples = 1000000;
  std::uint64_t seed = 1;
  int threads = 1;
  double tol_mean = -1.0;  // negative: 1e-3 q
};

BetheEstimate bethe_value(double d, const ConstraintModel& model, const Population& pi, const BetheOptions& opts = {});
// Estimate of bethe_value - bethe_trivial. Samples are drawn from the
// size-biased (planted) law, so each term is a log ratio against the trivial
// value instead of a Lambda-weighted sum.
BetheEstimate bethe_gap(double d, const ConstraintModel& model, const Population& pi, const BetheOptions& opts = {});
// Scalar form for k-NAESAT; pi is a measure on [0, 1] with mean 1/2.
BetheEstimate naesat_bethe(double d, int k, std::span<const double> pi, const BetheOptions& opts = {},
                           std::span<const double> weights = {});

enum class InitKind { kUniform, kPlantedBias, kRandom };
std::string to_string(InitKind kind);
InitKind init_from_string(const std::string& s);

struct PopulationOptions {
  std::size_t size = 100000;
  int sweeps = 200;
  InitKind init = InitKind::kPlantedBias;
  double epsilon = 0.3;
  std::uint64_t seed = 1;
  int threads = 1;
  double tol_mean = -1.0;
};

Population population_dynamics(double d, const ConstraintModel& model, const PopulationOptions& opts);

struct GapPoint {
  double d;
  double gap;
  double stderr;
  std::string best_init;
  bool positive;
};

struct DcondOptions {
  PopulationOptions population;
  std::uint64_t samples = 1000000;
  int seeds = 5;
  std::vector<InitKind> inits = {InitKind::kUniform, InitKind::kRandom, InitKind::kPlantedBias};
  double tol_d = 0.05;
  double z = 3.0;
};

// gap(d): the best initialisation is chosen with a pilot estimate and then
// re-estimated on fresh samples.
GapPoint gap_at(double d, const ConstraintModel& model, const DcondOptions& opts);

struct DcondResult {
  double lower;
  double upper;
  std::vector<GapPoint> curve;
};

DcondResult dcond_estimate(const ConstraintModel& model, double d_lo, double d_hi, const DcondOptions& opts);

}  // namespace cspphase
