#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cspphase/errors.hpp"
#include "cspphase/oracle.hpp"
#include "cspphase/spectral.hpp"

namespace cspphase {

namespace {

double compositions(int n, int parts) {
  double c = 1.0;
  for (int i = 1; i < parts; ++i) c = c * (n + i) / i;
  return c;
}

// log sum over compositions c of n into `parts` of multinom(n; c) * f(c / n)^m
template <class F>
double log_lattice_sum(int n, int m, int parts, F&& f) {
  if (compositions(n, parts) > 2e7) throw SizeGuardError("moments: composition lattice too large");
  std::vector<int> c(static_cast<std::size_t>(parts));
  std::vector<double> rho(static_cast<std::size_t>(parts));
  std::vector<double> terms;
  const double lfact_n = std::lgamma(n + 1.0);
  auto rec = [&](auto& self, int i, int left) -> void {
    if (i == parts - 1) {
      c[static_cast<std::size_t>(i)] = left;
      double lw = lfact_n;
      for (int j = 0; j < parts; ++j) {
        lw -= std::lgamma(c[static_cast<std::size_t>(j)] + 1.0);
        rho[static_cast<std::size_t>(j)] = static_cast<double>(c[static_cast<std::size_t>(j)]) / n;
      }
      if (m > 0) {
        const double v = f(rho);
        if (v <= 0.0) return;
        lw += m * std::log(v);
      }
      terms.push_back(lw);
      return;
    }
    for (int x = 0; x <= left; ++x) {
      c[static_cast<std::size_t>(i)] = x;
      self(self, i + 1, left - x);
    }
  };
  rec(rec, 0, n);
  if (terms.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(terms.begin(), terms.end());
  long double s = 0.0L;
  for (double t : terms) s += std::exp(static_cast<long double>(t - mx));
  return mx + static_cast<double>(std::log(s));
}

}  // namespace

double log_first_moment_exact(int n, int m, const ConstraintModel& model) {
  if (n <= 0 || m < 0) throw ConfigError("moments: invalid sizes");
  return log_lattice_sum(n, m, model.q(), [&](const std::vector<double>& rho) { return phi_first(model, rho); });
}

double log_second_moment_exact(int n, int m, const ConstraintModel& model) {
  if (n <= 0 || m < 0) throw ConfigError("moments: invalid sizes");
  const int q = model.q();
  return log_lattice_sum(n, m, q * q, [&](const std::vector<double>& rho) { return phi_second(model, rho); });
}

AsymptoticMoments moment_asymptotic(int n, int m, const ConstraintModel& model) {
  if (n <= 0 || m < 0) throw ConfigError("moments: invalid sizes");
  const int q = model.q();
  const int k = model.k();
  AsymptoticMoments r;
  r.d = static_cast<double>(k) * m / n;
  const double x = r.d * (k - 1);
  const SpectralReport sp = spectral_report(model);

  std::vector<double> eig_phi = sp.eig_phi;
  // drop the eigenvalue belonging to the constant vector
  auto one = std::min_element(eig_phi.begin(), eig_phi.end(),
                              [](double a, double b) { return std::abs(a - 1.0) < std::abs(b - 1.0); });
  eig_phi.erase(one);
  double log_first_corr = 0.0;
  for (double l : eig_phi) {
    const double f = 1.0 - x * l;
    if (!(f > 0.0)) throw NumericRefusal("first moment: 1 - d(k-1) lambda <= 0");
    log_first_corr -= 0.5 * std::log(f);
  }
  double log_second_corr = 0.0;
  for (double l : sp.eig_xi_Eprime) {
    const double f = 1.0 - x * l;
    if (!(f > 0.0)) throw NumericRefusal("second moment: 1 - d(k-1) lambda <= 0");
    log_second_corr -= 0.5 * std::log(f);
  }
  r.first_product = std::exp(log_first_corr);
  r.second_product = std::exp(log_second_corr);
  const double lq = std::log(static_cast<double>(q));
  r.log_first = n * lq + m * std::log(model.xi()) + log_first_corr;
  r.log_second = 2.0 * n * lq + 2.0 * m * std::log(model.xi()) + log_second_corr;
  r.log_first_sqrt_q = r.log_first + 0.5 * lq;
  r.log_second_sqrt_q = r.log_second + lq;
  return r;
}

}  // namespace cspphase
