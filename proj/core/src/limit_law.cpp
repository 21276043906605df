#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cspphase/cycles.hpp"
#include "cspphase/errors.hpp"
#include "cspphase/parallel.hpp"
#include "cspphase/spectral.hpp"
#include "cspphase/stats.hpp"

namespace cspphase {

namespace {

// sum over Eig[Xi] of lambda^ell, from powers of Xi restricted to E. The
// unrestricted form Tr Xi^ell - 2 Tr Phi^ell + 1 cancels badly at large ell.
std::vector<double> xi_power_traces(const SpectralReport& sp, int ell_max) {
  std::vector<double> out(static_cast<std::size_t>(ell_max) + 1, 0.0);
  const DenseMatrix b = ones_complement_basis(sp.phi.rows);
  const DenseMatrix xe = restrict_to(sp.xi_op, kron(b, b));
  DenseMatrix x = DenseMatrix::identity(xe.rows);
  for (int l = 1; l <= ell_max; ++l) {
    x = x * xe;
    out[static_cast<std::size_t>(l)] = x.trace();
  }
  return out;
}

// Counts are returned as doubles; at large ell the means exceed the int range.
double poisson_large(double mean, Rng& rng) {
  if (mean < 30.0) return rng.poisson(mean);
  if (mean > 1e18) throw NumericRefusal("limit law: Poisson mean too large");
  std::poisson_distribution<long long> dist(mean);
  return static_cast<double>(dist(rng.engine()));
}

}  // namespace

LimitLawReport simulate_limit_law(const ConstraintModel& model, double d, const LimitLawOptions& opts) {
  if (d < 0.0) throw ConfigError("limit law: d must be nonnegative");
  if (opts.trials < 2 || opts.ell_max < 1) throw ConfigError("limit law: need trials >= 2 and ell_max >= 1");
  const int k = model.k();
  const double x = d * (k - 1);
  const SpectralReport sp = spectral_report(model);
  double max_abs = 0.0;
  for (double l : sp.eig_xi_E) max_abs = std::max(max_abs, std::abs(l));
  if (x * max_abs >= 1.0) throw NumericRefusal("limit law: d(k-1) max|lambda| >= 1, the series diverges");

  const int L = opts.ell_max;
  const int first_in_k = k == 2 ? 3 : 2;
  const auto& orbit = model.phi_orbit();
  bool deterministic = true;
  for (const auto& [w, m] : orbit)
    if (max_abs_diff(m, orbit.front().second) > 1e-12) deterministic = false;
  std::vector<double> orbit_w;
  for (const auto& [w, m] : orbit) orbit_w.push_back(w);
  const AliasTable orbit_sampler(orbit_w);

  // dbar[l] = Tr(Phi^l) - 1, from Phi restricted to the complement of 1 so
  // that small values keep their relative precision
  std::vector<double> mu(static_cast<std::size_t>(L) + 1), tbar(static_cast<std::size_t>(L) + 1),
      dbar(static_cast<std::size_t>(L) + 1);
  {
    const DenseMatrix pr = restrict_to(sp.phi, ones_complement_basis(sp.phi.rows));
    DenseMatrix p = DenseMatrix::identity(pr.rows);
    for (int l = 1; l <= L; ++l) {
      p = p * pr;
      mu[static_cast<std::size_t>(l)] = std::pow(x, l) / (2.0 * l);
      dbar[static_cast<std::size_t>(l)] = p.trace();
      tbar[static_cast<std::size_t>(l)] = 1.0 + p.trace();
    }
  }
  const auto xi_tr = xi_power_traces(sp, L);
  if (!deterministic) {
    double work = 0.0;
    for (int l = 1; l <= L; ++l) work += mu[static_cast<std::size_t>(l)] * l;
    if (work * opts.trials > static_cast<double>(opts.work_limit))
      throw SizeGuardError("limit law: expected matrix products exceed the work limit; lower ell_max or trials");
  }

  const auto trials = static_cast<std::size_t>(opts.trials);
  // per trial: log|factor_l| and sign for l = 1..L
  std::vector<double> logf(trials * static_cast<std::size_t>(L));
  std::vector<signed char> sgn(trials * static_cast<std::size_t>(L));
  const ChunkPlan plan = plan_chunks(trials, 256);
  parallel_for(plan.chunks, opts.threads, [&](std::size_t c) {
    Rng rng(opts.seed, c);
    for (std::size_t t = plan.begin(c); t < plan.end(c); ++t) {
      for (int l = 1; l <= L; ++l) {
        const std::size_t slot = t * static_cast<std::size_t>(L) + static_cast<std::size_t>(l) - 1;
        const double m_l = mu[static_cast<std::size_t>(l)];
        const double K = poisson_large(m_l, rng);
        const double delta = dbar[static_cast<std::size_t>(l)];
        double lg = -m_l * delta;
        int sign = 1;
        if (deterministic) {
          // every orbit matrix equals Phi, so the K traces are all 1 + delta
          if (K > 0) {
            if (std::abs(1.0 + delta) < 1e-12) {
              sign = 0;
            } else {
              lg += K * std::log1p(delta > -1.0 ? delta : -2.0 - delta);
              if (delta < -1.0 && std::fmod(K, 2.0) == 1.0) sign = -sign;
            }
          }
        } else {
          for (double i = 0; i < K && sign != 0; ++i) {
            DenseMatrix prod = orbit[orbit_sampler.sample(rng)].second;
            for (int j = 1; j < l; ++j) prod = prod * orbit[orbit_sampler.sample(rng)].second;
            const double tr = prod.trace();
            if (tr == 0.0) sign = 0;
            else {
              lg += std::log(std::abs(tr));
              if (tr < 0.0) sign = -sign;
            }
          }
        }
        logf[slot] = lg;
        sgn[slot] = static_cast<signed char>(sign);
      }
    }
  });

  LimitLawReport rep;
  rep.d = d;
  rep.ell_max = L;
  rep.deterministic_traces = deterministic;
  rep.k_samples.resize(trials);
  rep.k_star_samples.resize(trials);
  double det_prefix = 0.0;
  for (int l = 1; l < first_in_k && l <= L; ++l) det_prefix -= mu[static_cast<std::size_t>(l)] * dbar[static_cast<std::size_t>(l)];
  std::vector<RunningStat> level_mean(static_cast<std::size_t>(L)), level_second(static_cast<std::size_t>(L));
  RunningStat star_second;
  rep.k_min = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    double lk = det_prefix, lks = 0.0;
    int sk = 1, sks = 1;
    for (int l = 1; l <= L; ++l) {
      const std::size_t slot = t * static_cast<std::size_t>(L) + static_cast<std::size_t>(l) - 1;
      // accumulate f - 1 and f^2 - 1: at large ell the factors sit within
      // 1e-12 of 1 and a plain running mean loses them in rounding
      const int sg = sgn[slot];
      const double lg = logf[slot];
      level_mean[static_cast<std::size_t>(l) - 1].add(sg == 1 ? std::expm1(lg) : sg == 0 ? -1.0 : -std::exp(lg) - 1.0);
      level_second[static_cast<std::size_t>(l) - 1].add(sg == 0 ? -1.0 : std::expm1(2.0 * lg));
      lks += logf[slot];
      sks *= sgn[slot];
      if (l >= first_in_k) {
        lk += logf[slot];
        sk *= sgn[slot];
      }
    }
    rep.k_samples[t] = sk * std::exp(lk);
    rep.k_star_samples[t] = sks * std::exp(lks);
    rep.k_min = std::min(rep.k_min, rep.k_samples[t]);
    star_second.add(rep.k_star_samples[t] * rep.k_star_samples[t]);
  }
  double log_trunc = 0.0;
  for (int l = 1; l <= L; ++l) {
    const double pred = mu[static_cast<std::size_t>(l)] * xi_tr[static_cast<std::size_t>(l)];
    log_trunc += pred;
    const auto& a = level_mean[static_cast<std::size_t>(l) - 1];
    const auto& b = level_second[static_cast<std::size_t>(l) - 1];
    rep.levels.push_back({l, mu[static_cast<std::size_t>(l)], tbar[static_cast<std::size_t>(l)], 1.0 + a.mean(),
                          a.stderr_of_mean(), 1.0 + b.mean(), b.stderr_of_mean(), std::exp(pred), l >= first_in_k});
  }
  double log_closed = 0.0;
  for (double lam : sp.eig_xi_E) log_closed -= 0.5 * std::log(1.0 - x * lam);
  rep.k_star_second = star_second.mean();
  rep.k_star_second_stderr = star_second.stderr_of_mean();
  rep.k_star_second_truncated = std::exp(log_trunc);
  rep.k_star_second_closed = std::exp(log_closed);
  rep.tail_bound = log_closed - log_trunc;
  return rep;
}

SeriesReport delta_kappa_series(const ConstraintModel& model, double d, int ell_max, int enumerate_up_to) {
  if (ell_max < 1) throw ConfigError("series: ell_max must be positive");
  const int k = model.k();
  const double x = d * (k - 1);
  const SpectralReport sp = spectral_report(model);
  const auto xi_tr = xi_power_traces(sp, ell_max);
  SeriesReport rep;
  double partial = 0.0;
  for (int l = 1; l <= ell_max; ++l) {
    SeriesTerm term{l, std::numeric_limits<double>::quiet_NaN(), std::pow(x, l) / (2.0 * l) * xi_tr[static_cast<std::size_t>(l)], 0.0};
    if (l <= enumerate_up_to && model.closure() == Closure::kExplicit) {
      try {
        double s = 0.0;
        for (const auto& y : enumerate_signatures(model, l)) {
          const CycleConstants c = signature_constants(y, d, model);
          s += c.delta * c.delta * c.kappa;
        }
        term.enumerated = s;
      } catch (const SizeGuardError&) {
      }
    }
    partial += term.spectral;
    term.partial = partial;
    rep.terms.push_back(term);
  }
  rep.closed_form = 0.0;
  for (double lam : sp.eig_xi_E) {
    if (x * lam >= 1.0) {
      rep.closed_form = std::numeric_limits<double>::infinity();
      break;
    }
    rep.closed_form -= 0.5 * std::log(1.0 - x * lam);
  }
  return rep;
}

ColoringConstant coloring_limit_constant(int q, double d, int ell_max) {
  if (q < 3) throw ConfigError("colouring constant: q must be at least 3");
  if (d < 0.0) throw ConfigError("colouring constant: d must be nonnegative");
  ColoringConstant c;
  for (int l = 1; l <= std::max(ell_max, 2); ++l) c.delta.push_back(-std::pow(1.0 - q, 1 - l));
  c.prefactor = std::sqrt(static_cast<double>(q)) * std::pow(1.0 + d / (q - 1), (1.0 - q) / 2.0) *
                std::exp(-d * c.delta[0] / 2.0 - d * d * c.delta[1] / 4.0);
  return c;
}

std::vector<double> coloring_limit_samples(int q, double d, int trials, int ell_max, std::uint64_t seed) {
  const ColoringConstant c = coloring_limit_constant(q, d, ell_max);
  std::vector<double> out(static_cast<std::size_t>(trials));
  Rng rng(seed, 0xc01);
  for (auto& v : out) {
    double lg = 0.0;
    for (int l = 3; l <= ell_max; ++l) {
      const double mu = std::pow(d, l) / (2.0 * l);
      const double delta = c.delta[static_cast<std::size_t>(l) - 1];
      lg += poisson_large(mu, rng) * std::log1p(delta) - mu * delta;
    }
    v = std::exp(lg);
  }
  return out;
}

}  // namespace cspphase
