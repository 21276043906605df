#include "cspphase/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <functional>
#include <limits>
#include <sstream>

#include "cspphase/errors.hpp"
#include "cspphase/parallel.hpp"
#include "cspphase/spectral.hpp"
#include "cspphase/stats.hpp"

namespace cspphase {

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::kPass:
      return "pass";
    case CheckStatus::kPassSampled:
      return "pass-sampled";
    case CheckStatus::kFail:
      return "fail";
    case CheckStatus::kInconclusive:
      return "inconclusive";
  }
  return "?";
}

const CheckResult& AssumptionReport::get(const std::string& condition) const {
  for (const auto& r : results)
    if (r.condition == condition) return r;
  throw ConfigError("no result for condition " + condition);
}

namespace {

std::vector<double> dirichlet(int q, double alpha, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(q));
  std::gamma_distribution<double> g(alpha, 1.0);
  double s = 0.0;
  for (double& x : v) {
    x = g(rng.engine());
    s += x;
  }
  if (!(s > 0.0)) {
    std::fill(v.begin(), v.end(), 1.0 / q);
    return v;
  }
  for (double& x : v) x /= s;
  return v;
}

std::vector<double> uniform_vec(int q) { return std::vector<double>(static_cast<std::size_t>(q), 1.0 / q); }

std::string join(std::span<const double> v) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

// Aggregated probability per distinct table, used for permutation closure.
std::map<std::vector<double>, double> table_masses(const ConstraintModel& model) {
  std::map<std::vector<double>, double> mass;
  for (const auto& w : model.base()) {
    mass[std::vector<double>(w.table.values().begin(), w.table.values().end())] += w.prob;
  }
  return mass;
}

std::vector<double> swap_coordinates(const std::vector<double>& vals, int q, int k, int i) {
  std::vector<double> out(vals.size());
  std::vector<int> tuple(static_cast<std::size_t>(k));
  for (std::size_t idx = 0; idx < vals.size(); ++idx) {
    WeightTable::tuple_of(idx, q, tuple);
    std::swap(tuple[static_cast<std::size_t>(i)], tuple[static_cast<std::size_t>(i + 1)]);
    out[WeightTable::index_of(tuple, q)] = vals[idx];
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

CheckResult check_sym(const ConstraintModel& model, double tol) {
  CheckResult r;
  r.condition = "SYM";
  const int q = model.q();
  const int k = model.k();
  const double target = std::pow(static_cast<double>(q), k - 1) * model.xi();
  const double scale = std::max(1.0, target);
  for (std::size_t f = 0; f < model.base().size(); ++f) {
    const auto& t = model.base()[f].table;
    for (int i = 0; i < k; ++i) {
      for (int w = 0; w < q; ++w) {
        const double rs = t.row_sum(i, w);
        const double resid = std::abs(rs - target);
        r.worst_residual = std::max(r.worst_residual, resid);
        if (resid > tol * scale && r.witnesses.size() < 8) {
          std::ostringstream os;
          os << "function " << f << " position " << i << " value " << w << ": row sum " << rs << " != " << target;
          r.witnesses.push_back({"row-sum", os.str(), {static_cast<double>(f), static_cast<double>(i),
                                                        static_cast<double>(w), rs, target}});
        }
      }
    }
  }
  if (model.closure() == Closure::kExplicit && k > 1) {
    const auto mass = table_masses(model);
    for (int i = 0; i + 1 < k; ++i) {
      std::map<std::vector<double>, double> moved;
      for (const auto& [vals, p] : mass) moved[swap_coordinates(vals, q, k, i)] += p;
      bool same = moved.size() == mass.size();
      double worst = 0.0;
      if (same) {
        auto b = mass.cbegin();
        for (auto a = moved.cbegin(); a != moved.cend(); ++a, ++b) {
          if (a->first != b->first) {
            same = false;
            break;
          }
          worst = std::max(worst, std::abs(a->second - b->second));
        }
      }
      if (!same || worst > tol) {
        std::ostringstream os;
        os << "law of Psi is not invariant under swapping coordinates " << i << " and " << i + 1;
        r.witnesses.push_back({"permutation", os.str(), {static_cast<double>(i), static_cast<double>(i + 1)}});
        r.worst_residual = std::max(r.worst_residual, same ? worst : 1.0);
      }
    }
  }
  r.status = r.witnesses.empty() ? CheckStatus::kPass : CheckStatus::kFail;
  r.diagnostics.push_back({"target_row_sum", target});
  return r;
}

// ---------------------------------------------------------------------------

std::vector<double> phi_gradient(const ConstraintModel& model, std::span<const double> mu) {
  const int q = model.q();
  const int k = model.k();
  const auto& e = model.expected_table();
  std::vector<double> g(static_cast<std::size_t>(q), 0.0);
  std::vector<int> s(static_cast<std::size_t>(k));
  for (std::size_t idx = 0; idx < e.size(); ++idx) {
    if (e[idx] == 0.0) continue;
    WeightTable::tuple_of(idx, q, s);
    for (int i = 0; i < k; ++i) {
      double p = e[idx];
      for (int j = 0; j < k; ++j)
        if (j != i) p *= mu[static_cast<std::size_t>(s[static_cast<std::size_t>(j)])];
      g[static_cast<std::size_t>(s[static_cast<std::size_t>(i)])] += p;
    }
  }
  return g;
}

DenseMatrix phi_hessian(const ConstraintModel& model, std::span<const double> mu) {
  const int q = model.q();
  const int k = model.k();
  const auto& e = model.expected_table();
  DenseMatrix h(static_cast<std::size_t>(q), static_cast<std::size_t>(q));
  std::vector<int> s(static_cast<std::size_t>(k));
  for (std::size_t idx = 0; idx < e.size(); ++idx) {
    if (e[idx] == 0.0) continue;
    WeightTable::tuple_of(idx, q, s);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        if (i == j) continue;
        double p = e[idx];
        for (int l = 0; l < k; ++l)
          if (l != i && l != j) p *= mu[static_cast<std::size_t>(s[static_cast<std::size_t>(l)])];
        h(static_cast<std::size_t>(s[static_cast<std::size_t>(i)]), static_cast<std::size_t>(s[static_cast<std::size_t>(j)])) += p;
      }
    }
  }
  return h;
}

CheckResult check_bal(const ConstraintModel& model, int sample_points, double tol, std::uint64_t seed) {
  CheckResult r;
  r.condition = "BAL";
  const int q = model.q();
  const int k = model.k();
  const auto u = uniform_vec(q);
  const double phi_u = phi_first(model, u);
  const DenseMatrix basis = ones_complement_basis(static_cast<std::size_t>(q));

  const auto grad = phi_gradient(model, u);
  double grad_resid = 0.0;
  for (double g : grad) grad_resid = std::max(grad_resid, std::abs(g - k * model.xi()));
  r.diagnostics.push_back({"gradient_residual", grad_resid});
  if (grad_resid > tol * std::max(1.0, k * model.xi())) {
    r.witnesses.push_back({"gradient", "gradient at uniform differs from k*xi*1", grad});
  }

  auto curvature = [&](std::span<const double> mu) {
    const auto eig = symmetric_eigenvalues(restrict_to(phi_hessian(model, mu), basis));
    return eig.back();
  };
  double worst_curv = curvature(u);
  if (worst_curv > tol) {
    r.witnesses.push_back({"hessian", "Hessian at uniform has a positive direction on 1-perp", u});
  }

  Rng rng(seed, 0x6a1);
  std::vector<std::vector<double>> points;
  for (int i = 0; i < q; ++i) {
    std::vector<double> v(static_cast<std::size_t>(q), 0.0);
    v[static_cast<std::size_t>(i)] = 1.0;
    points.push_back(v);
  }
  for (int i = 0; i < sample_points; ++i) points.push_back(dirichlet(q, i % 2 == 0 ? 1.0 : 0.3, rng));

  double worst_excess = 0.0;
  for (const auto& mu : points) {
    const double c = curvature(mu);
    worst_curv = std::max(worst_curv, c);
    if (c > tol && r.witnesses.size() < 8) {
      r.witnesses.push_back({"hessian", "Hessian has a positive direction on 1-perp at mu = " + join(mu), mu});
    }
    const double excess = phi_first(model, mu) - phi_u;
    worst_excess = std::max(worst_excess, excess);
    if (excess > tol && r.witnesses.size() < 8) {
      r.witnesses.push_back({"mu", "phi(mu) exceeds phi(uniform) by " + std::to_string(excess) + " at mu = " + join(mu), mu});
    }
  }
  r.diagnostics.push_back({"max_curvature", worst_curv});
  r.diagnostics.push_back({"max_excess_over_uniform", worst_excess});
  r.worst_residual = std::max({grad_resid, std::max(worst_curv, 0.0), worst_excess});
  // Value violations first: they are the most direct witnesses.
  std::stable_partition(r.witnesses.begin(), r.witnesses.end(), [](const Witness& w) { return w.kind == "mu"; });
  r.status = r.witnesses.empty() ? CheckStatus::kPassSampled : CheckStatus::kFail;
  return r;
}

// ---------------------------------------------------------------------------

void sinkhorn_project(std::vector<double>& rho, int q, double tol, int max_iter) {
  const double target = 1.0 / q;
  const std::size_t n = static_cast<std::size_t>(q);
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += rho[i * n + j];
      for (std::size_t j = 0; j < n; ++j) rho[i * n + j] *= target / s;
    }
    double err = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += rho[i * n + j];
      err = std::max(err, std::abs(s - target));
      for (std::size_t i = 0; i < n; ++i) rho[i * n + j] *= target / s;
    }
    if (err < tol) return;
  }
}

std::vector<double> phi_second_gradient(const ConstraintModel& model, std::span<const double> rho) {
  const int q = model.q();
  const int k = model.k();
  const auto& pe = model.pair_expectation();
  const std::size_t cells = model.expected_table().size();
  std::vector<double> g(static_cast<std::size_t>(q * q), 0.0);
  std::vector<int> s(static_cast<std::size_t>(k)), t(static_cast<std::size_t>(k));
  std::vector<double> f(static_cast<std::size_t>(k)), prefix(static_cast<std::size_t>(k) + 1), suffix(static_cast<std::size_t>(k) + 1);
  for (std::size_t a = 0; a < cells; ++a) {
    WeightTable::tuple_of(a, q, s);
    for (std::size_t b = 0; b < cells; ++b) {
      const double w = pe[a * cells + b];
      if (w == 0.0) continue;
      WeightTable::tuple_of(b, q, t);
      for (int i = 0; i < k; ++i)
        f[static_cast<std::size_t>(i)] = rho[static_cast<std::size_t>(s[static_cast<std::size_t>(i)] * q + t[static_cast<std::size_t>(i)])];
      prefix[0] = 1.0;
      for (int i = 0; i < k; ++i) prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(i)];
      suffix[static_cast<std::size_t>(k)] = 1.0;
      for (int i = k; i-- > 0;) suffix[static_cast<std::size_t>(i)] = suffix[static_cast<std::size_t>(i) + 1] * f[static_cast<std::size_t>(i)];
      for (int i = 0; i < k; ++i) {
        g[static_cast<std::size_t>(s[static_cast<std::size_t>(i)] * q + t[static_cast<std::size_t>(i)])] +=
            w * prefix[static_cast<std::size_t>(i)] * suffix[static_cast<std::size_t>(i) + 1];
      }
    }
  }
  return g;
}

namespace {

struct MinRun {
  std::vector<double> rho;
  double value;
  int iterations;
};

MinRun minimize_phi_bar(const ConstraintModel& model, std::vector<double> rho, int max_iter) {
  const int q = model.q();
  double value = phi_second(model, rho);
  double step = 1.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    const auto g = phi_second_gradient(model, rho);
    double gmax = 0.0;
    for (double x : g) gmax = std::max(gmax, std::abs(x));
    if (gmax == 0.0) break;
    bool accepted = false;
    while (step > 1e-18) {
      std::vector<double> cand(rho.size());
      // Mirror step in the entropy geometry, then the Sinkhorn projection.
      for (std::size_t i = 0; i < rho.size(); ++i) cand[i] = rho[i] * std::exp(-step * g[i] / gmax);
      sinkhorn_project(cand, q);
      double decrease = 0.0;
      for (std::size_t i = 0; i < rho.size(); ++i) decrease += g[i] * (rho[i] - cand[i]);
      const double cv = phi_second(model, cand);
      if (cv <= value - 1e-4 * std::max(decrease, 0.0) && cv <= value) {
        double moved = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) moved = std::max(moved, std::abs(cand[i] - rho[i]));
        rho = std::move(cand);
        const bool stalled = value - cv <= 1e-17 && moved < 1e-15;
        value = cv;
        accepted = !stalled;
        step = std::min(step * 2.0, 1e8);
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return {std::move(rho), value, it};
}

double tv_to_uniform(std::span<const double> rho, int q) {
  double tv = 0.0;
  for (double x : rho) tv += std::abs(x - 1.0 / (q * q));
  return 0.5 * tv;
}

}  // namespace

CheckResult check_min(const ConstraintModel& model, const MinOptions& opts, std::uint64_t seed) {
  CheckResult r;
  r.condition = "MIN";
  const int q = model.q();
  const std::size_t n2 = static_cast<std::size_t>(q * q);
  const std::vector<double> bar(n2, 1.0 / (q * q));
  const double v_bar = phi_second(model, bar);
  r.diagnostics.push_back({"phi_bar_at_uniform", v_bar});
  r.diagnostics.push_back({"xi_squared", model.xi() * model.xi()});

  Rng rng(seed, 0x31a);
  bool all_converged = true;
  double worst_tv = 0.0;
  for (int run = 0; run < opts.restarts; ++run) {
    std::vector<double> start(n2);
    if (run % 4 == 3) {
      // near a permutation coupling
      std::vector<int> perm(static_cast<std::size_t>(q));
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng.engine());
      for (std::size_t i = 0; i < n2; ++i) start[i] = 0.02 + rng.uniform() * 0.01;
      for (int i = 0; i < q; ++i) start[static_cast<std::size_t>(i * q + perm[static_cast<std::size_t>(i)])] = 1.0;
    } else {
      std::exponential_distribution<double> ex(1.0);
      for (double& x : start) x = ex(rng.engine()) + 1e-3;
    }
    sinkhorn_project(start, q);
    const MinRun res = minimize_phi_bar(model, start, opts.max_iterations);
    const double gap = res.value - v_bar;
    const double tv = tv_to_uniform(res.rho, q);
    worst_tv = std::max(worst_tv, tv);
    if (gap < -opts.tol) {
      r.witnesses.push_back({"rho", "phi_bar(rho) is below phi_bar(uniform) by " + std::to_string(-gap), res.rho});
      r.worst_residual = std::max(r.worst_residual, -gap);
    } else if (tv > opts.dist_tol) {
      all_converged = false;
    }
  }

  // Strict excess at perturbed points around the uniform coupling.
  double min_excess = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 16; ++i) {
    std::vector<double> d(n2);
    for (double& x : d) x = rng.uniform() - 0.5;
    // double centering keeps row and column sums fixed
    for (int a = 0; a < q; ++a) {
      double s = 0.0;
      for (int b = 0; b < q; ++b) s += d[static_cast<std::size_t>(a * q + b)];
      for (int b = 0; b < q; ++b) d[static_cast<std::size_t>(a * q + b)] -= s / q;
    }
    for (int b = 0; b < q; ++b) {
      double s = 0.0;
      for (int a = 0; a < q; ++a) s += d[static_cast<std::size_t>(a * q + b)];
      for (int a = 0; a < q; ++a) d[static_cast<std::size_t>(a * q + b)] -= s / q;
    }
    double dmax = 0.0;
    for (double x : d) dmax = std::max(dmax, std::abs(x));
    if (dmax == 0.0) continue;
    std::vector<double> rho(n2);
    const double eps = 0.5 / (q * q) / dmax;
    for (std::size_t j = 0; j < n2; ++j) rho[j] = bar[j] + eps * d[j];
    const double excess = phi_second(model, rho) - v_bar;
    min_excess = std::min(min_excess, excess);
    if (excess < -opts.tol) {
      r.witnesses.push_back({"rho", "perturbed coupling lowers phi_bar by " + std::to_string(-excess), rho});
      r.worst_residual = std::max(r.worst_residual, -excess);
    } else if (!(excess > 0.0)) {
      all_converged = false;
    }
  }
  r.diagnostics.push_back({"worst_final_tv", worst_tv});
  r.diagnostics.push_back({"min_perturbed_excess", min_excess});
  if (!r.witnesses.empty()) {
    r.status = CheckStatus::kFail;
  } else {
    r.status = all_converged ? CheckStatus::kPassSampled : CheckStatus::kInconclusive;
  }
  return r;
}

// ---------------------------------------------------------------------------

FiniteMeasure random_centered_measure(int q, int support, Rng& rng) {
  FiniteMeasure m;
  m.q = q;
  for (int s = 0; s < support; ++s) {
    const auto mu = dirichlet(q, 1.0, rng);
    for (int shift = 0; shift < q; ++shift)
      for (int c = 0; c < q; ++c) m.atoms.push_back(mu[static_cast<std::size_t>((c + shift) % q)]);
  }
  return m;
}

namespace {

double sum_product(const WeightTable& t, std::span<const std::span<const double>> rhos) {
  const int q = t.q();
  const int k = t.k();
  std::vector<int> s(static_cast<std::size_t>(k));
  double total = 0.0;
  for (std::size_t idx = 0; idx < t.size(); ++idx) {
    if (t[idx] == 0.0) continue;
    WeightTable::tuple_of(idx, q, s);
    double p = t[idx];
    for (int i = 0; i < k; ++i) p *= rhos[static_cast<std::size_t>(i)][static_cast<std::size_t>(s[static_cast<std::size_t>(i)])];
    total += p;
  }
  return total;
}

double binom(int n, int r) {
  double b = 1.0;
  for (int i = 1; i <= r; ++i) b = b * (n - r + i) / i;
  return b;
}

// E_pi[prod_c rho(c)^{n_c}]
double moment(const FiniteMeasure& pi, std::span<const int> counts) {
  double s = 0.0;
  for (std::size_t a = 0; a < pi.size(); ++a) {
    const auto rho = pi.atom(a);
    double p = 1.0;
    for (std::size_t c = 0; c < counts.size(); ++c) p *= std::pow(rho[c], counts[c]);
    s += p;
  }
  return s / static_cast<double>(pi.size());
}

template <class F>
void for_each_composition(int total, int parts, F&& f) {
  std::vector<int> c(static_cast<std::size_t>(parts), 0);
  auto rec = [&](auto& self, int i, int left) -> void {
    if (i == parts - 1) {
      c[static_cast<std::size_t>(i)] = left;
      f(std::span<const int>(c));
      return;
    }
    for (int x = 0; x <= left; ++x) {
      c[static_cast<std::size_t>(i)] = x;
      self(self, i + 1, left - x);
    }
  };
  rec(rec, 0, total);
}

}  // namespace

std::vector<double> pos_closed_form(const ConstraintModel& model, const FiniteMeasure& pi,
                                    const FiniteMeasure& pi2, int ell) {
  const int k = model.k();
  const int q = model.q();
  if (model.softened()) throw ConfigError("closed forms apply to the hard models only");
  if (model.family() == Family::kColoring) {
    double t1 = 0.0, t2 = 0.0, t3 = 0.0;
    for_each_composition(ell, q, [&](std::span<const int> n) {
      double multinom = std::tgamma(ell + 1.0);
      for (int x : n) multinom /= std::tgamma(x + 1.0);
      const double a = moment(pi, n);
      const double b = moment(pi2, n);
      t1 += multinom * std::pow(a, k);
      t2 += multinom * std::pow(b, k);
      t3 += multinom * a * std::pow(b, k - 1);
    });
    return {t1, t2, t3};
  }
  if (model.family() == Family::kNaesat) {
    double t1 = 0.0, t2 = 0.0, t3 = 0.0;
    for (int j = 0; j <= ell; ++j) {
      const int c1[2] = {j, ell - j};
      const int c2[2] = {ell - j, j};
      const double a = 0.5 * (moment(pi, c1) + moment(pi, c2));
      const double b = 0.5 * (moment(pi2, c1) + moment(pi2, c2));
      const double bc = binom(ell, j);
      t1 += bc * std::pow(a, k);
      t2 += bc * std::pow(b, k);
      t3 += bc * a * std::pow(b, k - 1);
    }
    return {t1, t2, t3};
  }
  throw ConfigError("no closed form for this model");
}

CheckResult check_pos(const ConstraintModel& model, const PosOptions& opts, std::uint64_t seed) {
  CheckResult r;
  r.condition = "POS";
  const int q = model.q();
  const int k = model.k();
  const int L = opts.ell_max;
  if (L < 2) throw ConfigError("POS: ell_max must be at least 2");
  const bool closed = !model.softened() && (model.family() == Family::kColoring || model.family() == Family::kNaesat);

  struct PairResult {
    std::vector<RunningStat> expr, t1, t2, t3;
    FiniteMeasure pi, pi2;
  };
  std::vector<PairResult> results(static_cast<std::size_t>(opts.pairs));
  parallel_for(results.size(), opts.threads, [&](std::size_t p) {
    Rng rng(seed, 0x905 + p);
    PairResult& pr = results[p];
    pr.pi = random_centered_measure(q, opts.support, rng);
    if (p == 0) {
      // pi' = point mass at uniform
      pr.pi2.q = q;
      pr.pi2.atoms = uniform_vec(q);
    } else {
      pr.pi2 = random_centered_measure(q, opts.support, rng);
    }
    pr.expr.resize(static_cast<std::size_t>(L + 1));
    pr.t1.resize(static_cast<std::size_t>(L + 1));
    pr.t2.resize(static_cast<std::size_t>(L + 1));
    pr.t3.resize(static_cast<std::size_t>(L + 1));
    std::vector<std::span<const double>> ra(static_cast<std::size_t>(k)), rb(static_cast<std::size_t>(k)), rc(static_cast<std::size_t>(k));
    for (int trial = 0; trial < opts.trials; ++trial) {
      const WeightTable psi = model.materialize(model.sample_function(rng));
      for (int i = 0; i < k; ++i) {
        ra[static_cast<std::size_t>(i)] = pr.pi.atom(rng.below(pr.pi.size()));
        rb[static_cast<std::size_t>(i)] = pr.pi2.atom(rng.below(pr.pi2.size()));
      }
      rc = rb;
      rc[0] = ra[0];
      const double a = 1.0 - sum_product(psi, ra);
      const double b = 1.0 - sum_product(psi, rb);
      const double c = 1.0 - sum_product(psi, rc);
      double pa = a, pb = b, pc = c;
      for (int l = 2; l <= L; ++l) {
        pa *= a;
        pb *= b;
        pc *= c;
        pr.expr[static_cast<std::size_t>(l)].add(pa + (k - 1) * pb - k * pc);
        pr.t1[static_cast<std::size_t>(l)].add(pa);
        pr.t2[static_cast<std::size_t>(l)].add(pb);
        pr.t3[static_cast<std::size_t>(l)].add(pc);
      }
    }
  });

  double worst = 0.0;
  double worst_closed = 0.0;
  bool closed_ok = true;
  for (std::size_t p = 0; p < results.size(); ++p) {
    const auto& pr = results[p];
    for (int l = 2; l <= L; ++l) {
      const auto& s = pr.expr[static_cast<std::size_t>(l)];
      const double lower = -(opts.tol + 3.0 * s.stderr_of_mean());
      worst = std::min(worst, s.mean());
      if (s.mean() < lower) {
        std::ostringstream os;
        os << "pair " << p << ", ell " << l << ": POS expression " << s.mean() << " (stderr " << s.stderr_of_mean() << ")";
        std::vector<double> vals{static_cast<double>(p), static_cast<double>(l), s.mean(), s.stderr_of_mean()};
        vals.insert(vals.end(), pr.pi.atoms.begin(), pr.pi.atoms.end());
        vals.insert(vals.end(), pr.pi2.atoms.begin(), pr.pi2.atoms.end());
        r.witnesses.push_back({"pos", os.str(), std::move(vals)});
      }
      if (closed) {
        const auto cf = pos_closed_form(model, pr.pi, pr.pi2, l);
        const RunningStat* terms[3] = {&pr.t1[static_cast<std::size_t>(l)], &pr.t2[static_cast<std::size_t>(l)], &pr.t3[static_cast<std::size_t>(l)]};
        for (int t = 0; t < 3; ++t) {
          const double dev = std::abs(terms[t]->mean() - cf[static_cast<std::size_t>(t)]);
          const double allowed = 5.0 * terms[t]->stderr_of_mean() + 1e-9;
          worst_closed = std::max(worst_closed, dev / std::max(allowed, 1e-300));
          if (dev > allowed) closed_ok = false;
        }
      }
    }
  }
  r.worst_residual = -worst;
  r.diagnostics.push_back({"min_estimate", worst});
  if (closed) {
    r.diagnostics.push_back({"closed_form_consistent", closed_ok ? 1.0 : 0.0});
    r.diagnostics.push_back({"closed_form_worst_ratio", worst_closed});
  }
  r.status = r.witnesses.empty() ? CheckStatus::kPassSampled : CheckStatus::kFail;
  return r;
}

// ---------------------------------------------------------------------------

namespace {

using BoolMatrix = std::vector<std::uint8_t>;

BoolMatrix bool_product(const BoolMatrix& a, const BoolMatrix& b, int q) {
  BoolMatrix c(static_cast<std::size_t>(q * q), 0);
  for (int i = 0; i < q; ++i)
    for (int l = 0; l < q; ++l)
      if (a[static_cast<std::size_t>(i * q + l)])
        for (int j = 0; j < q; ++j)
          if (b[static_cast<std::size_t>(l * q + j)]) c[static_cast<std::size_t>(i * q + j)] = 1;
  return c;
}

}  // namespace

CheckResult check_uni(const ConstraintModel& model, int ell_max) {
  CheckResult r;
  r.condition = "UNI";
  const int q = model.q();
  const int k = model.k();
  if (k >= 3) {
    // Any two coordinate values must extend to a tuple in the support.
    for (std::size_t f = 0; f < model.base().size() && r.witnesses.empty(); ++f) {
      const auto& t = model.base()[f].table;
      std::vector<int> s(static_cast<std::size_t>(k));
      for (int i = 0; i < k && r.witnesses.empty(); ++i) {
        for (int j = i + 1; j < k && r.witnesses.empty(); ++j) {
          std::vector<std::uint8_t> seen(static_cast<std::size_t>(q * q), 0);
          for (std::size_t idx = 0; idx < t.size(); ++idx) {
            if (t[idx] <= 0.0) continue;
            WeightTable::tuple_of(idx, q, s);
            seen[static_cast<std::size_t>(s[static_cast<std::size_t>(i)] * q + s[static_cast<std::size_t>(j)])] = 1;
          }
          for (int a = 0; a < q * q; ++a) {
            if (!seen[static_cast<std::size_t>(a)]) {
              std::ostringstream os;
              os << "function " << f << ": positions (" << i << ", " << j << ") cannot take values (" << a / q
                 << ", " << a % q << ")";
              r.witnesses.push_back({"projection", os.str(), {static_cast<double>(f), static_cast<double>(i), static_cast<double>(j),
                                                               static_cast<double>(a / q), static_cast<double>(a % q)}});
              break;
            }
          }
        }
      }
    }
    r.status = r.witnesses.empty() ? CheckStatus::kPass : CheckStatus::kFail;
    return r;
  }
  if (k == 1) {
    r.status = CheckStatus::kPass;
    return r;
  }
  // k == 2: distinct oriented support matrices, then all cyclic products.
  std::set<BoolMatrix> distinct;
  for (std::uint64_t f = 0; f < model.function_count(); ++f) {
    const WeightTable t = model.materialize(f);
    BoolMatrix m(static_cast<std::size_t>(q * q)), mt(static_cast<std::size_t>(q * q));
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) {
        const bool on = t[static_cast<std::size_t>(a * q + b)] > 0.0;
        m[static_cast<std::size_t>(a * q + b)] = on;
        mt[static_cast<std::size_t>(b * q + a)] = on;
      }
    distinct.insert(m);
    distinct.insert(mt);
  }
  const std::vector<BoolMatrix> mats(distinct.begin(), distinct.end());
  for (const auto& m : mats) {
    for (int a = 0; a < q; ++a) {
      bool row = false, col = false;
      for (int b = 0; b < q; ++b) {
        row = row || m[static_cast<std::size_t>(a * q + b)];
        col = col || m[static_cast<std::size_t>(b * q + a)];
      }
      if (!row || !col) {
        r.witnesses.push_back({"support", "support matrix has an empty row or column", {}});
        r.status = CheckStatus::kFail;
        return r;
      }
    }
  }
  const double total = std::pow(static_cast<double>(mats.size()), ell_max);
  if (total > 4e6) {
    r.status = CheckStatus::kInconclusive;
    r.diagnostics.push_back({"sequences", total});
    return r;
  }
  // Depth-first over sequences; a product with zero trace is an unsatisfiable cycle.
  std::vector<std::size_t> seq;
  std::function<bool(const BoolMatrix&, int)> dfs = [&](const BoolMatrix& prod, int len) -> bool {
    if (len >= 2) {
      bool tr = false;
      for (int a = 0; a < q; ++a) tr = tr || prod[static_cast<std::size_t>(a * q + a)];
      if (!tr) {
        std::ostringstream os;
        os << "cycle of length " << len << " has no satisfying assignment";
        std::vector<double> vals;
        for (std::size_t s : seq) vals.push_back(static_cast<double>(s));
        r.witnesses.push_back({"cycle", os.str(), vals});
        return false;
      }
    }
    if (len == ell_max) return true;
    for (std::size_t i = 0; i < mats.size(); ++i) {
      seq.push_back(i);
      const bool ok = dfs(len == 0 ? mats[i] : bool_product(prod, mats[i], q), len + 1);
      seq.pop_back();
      if (!ok) return false;
    }
    return true;
  };
  dfs(BoolMatrix{}, 0);
  r.status = r.witnesses.empty() ? CheckStatus::kPass : CheckStatus::kFail;
  return r;
}

AssumptionReport check_all(const ConstraintModel& model, const AssumptionOptions& opts, std::uint64_t seed) {
  AssumptionReport rep;
  rep.results.push_back(check_sym(model, opts.sym_tol));
  rep.results.push_back(check_bal(model, opts.bal_points, opts.bal_tol, seed));
  rep.results.push_back(check_min(model, opts.min, seed));
  rep.results.push_back(check_pos(model, opts.pos, seed));
  rep.results.push_back(check_uni(model, opts.uni_ell_max));
  return rep;
}

}  // namespace cspphase
