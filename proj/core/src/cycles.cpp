#include "cspphase/cycles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "cspphase/errors.hpp"
#include "cspphase/graphs.hpp"
#include "cspphase/parallel.hpp"
#include "cspphase/spectral.hpp"
#include "cspphase/stats.hpp"

namespace cspphase {

std::string CycleSignature::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i) os << ' ';
    os << steps[i].w << ':' << steps[i].s + 1 << '>' << steps[i].t + 1;
  }
  return os.str();
}

void validate_signature(const CycleSignature& y, const ConstraintModel& model) {
  if (y.steps.empty()) throw ConfigError("signature: order must be at least 1");
  for (const auto& st : y.steps) {
    if (st.w >= model.function_count()) throw ConfigError("signature: weight index out of range");
    if (st.s < 0 || st.t < 0 || st.s >= model.k() || st.t >= model.k()) throw ConfigError("signature: position out of range");
    if (st.s == st.t) throw ConfigError("signature: s_i must differ from t_i");
  }
  if (y.order() == 1 && !(y.steps[0].s < y.steps[0].t)) throw ConfigError("signature: order 1 requires s_1 < t_1");
}

CycleConstants signature_constants(const CycleSignature& y, double d, const ConstraintModel& model) {
  validate_signature(y, model);
  const int ell = y.order();
  const int k = model.k();
  double kappa = ell == 1 ? d / k : std::pow(d / k, ell) / (2.0 * ell);
  DenseMatrix phi = DenseMatrix::identity(static_cast<std::size_t>(model.q()));
  for (const auto& st : y.steps) {
    kappa *= model.function_prob(st.w);
    phi = phi * phi_matrix(model.materialize(st.w), st.s, st.t, model.xi());
  }
  CycleConstants c;
  c.kappa = kappa;
  c.trace = phi.trace();
  c.kappa_hat = kappa * c.trace;
  c.delta = c.trace - 1.0;
  c.phi = std::move(phi);
  return c;
}

std::vector<CycleSignature> enumerate_signatures(const ConstraintModel& model, int ell, std::size_t limit) {
  if (ell < 1 || ell > 4) throw ConfigError("signatures: order must lie in [1, 4]");
  if (model.closure() != Closure::kExplicit) throw SizeGuardError("signatures: closure models have too many functions");
  const int k = model.k();
  std::vector<CycleStep> steps;
  for (std::uint64_t w = 0; w < model.function_count(); ++w)
    for (int s = 0; s < k; ++s)
      for (int t = 0; t < k; ++t)
        if (s != t) steps.push_back({w, s, t});
  if (std::pow(static_cast<double>(steps.size()), ell) > static_cast<double>(limit))
    throw SizeGuardError("signatures: too many signatures");
  std::vector<CycleSignature> out;
  CycleSignature cur;
  std::function<void()> rec = [&] {
    if (cur.order() == ell) {
      if (ell > 1 || cur.steps[0].s < cur.steps[0].t) out.push_back(cur);
      return;
    }
    for (const auto& st : steps) {
      cur.steps.push_back(st);
      rec();
      cur.steps.pop_back();
    }
  };
  rec();
  return out;
}

namespace {

struct Incidence {
  std::vector<std::vector<std::pair<int, int>>> of_var;  // (constraint, position)
  explicit Incidence(const FactorGraphInstance& inst) : of_var(static_cast<std::size_t>(inst.n)) {
    for (std::size_t h = 0; h < inst.constraints.size(); ++h) {
      const auto& vars = inst.constraints[h].vars;
      for (std::size_t p = 0; p < vars.size(); ++p)
        of_var[static_cast<std::size_t>(vars[p])].emplace_back(static_cast<int>(h), static_cast<int>(p));
    }
  }
};

std::uint64_t count_one(const FactorGraphInstance& inst, const Incidence& inc, const CycleSignature& y) {
  const int ell = y.order();
  std::vector<int> vars_on(static_cast<std::size_t>(ell)), cons_on(static_cast<std::size_t>(ell));
  std::uint64_t count = 0;
  std::function<void(int)> step = [&](int j) {
    const int v = vars_on[static_cast<std::size_t>(j)];
    const CycleStep& st = y.steps[static_cast<std::size_t>(j)];
    for (const auto& [h, p] : inc.of_var[static_cast<std::size_t>(v)]) {
      if (p != st.s) continue;
      const auto& c = inst.constraints[static_cast<std::size_t>(h)];
      if (c.w != st.w) continue;
      if (std::find(cons_on.begin(), cons_on.begin() + j, h) != cons_on.begin() + j) continue;
      const int next = c.vars[static_cast<std::size_t>(st.t)];
      if (j == ell - 1) {
        if (next != vars_on[0]) continue;
        if (ell > 1 && !(cons_on[0] < h)) continue;
        ++count;
        continue;
      }
      if (next <= vars_on[0]) continue;
      if (std::find(vars_on.begin() + 1, vars_on.begin() + j + 1, next) != vars_on.begin() + j + 1) continue;
      cons_on[static_cast<std::size_t>(j)] = h;
      vars_on[static_cast<std::size_t>(j) + 1] = next;
      step(j + 1);
    }
  };
  for (int i = 0; i < inst.n; ++i) {
    vars_on[0] = i;
    step(0);
  }
  return count;
}

}  // namespace

std::uint64_t count_cycles(const FactorGraphInstance& inst, const CycleSignature& y) {
  return count_cycles(inst, std::vector<CycleSignature>{y})[0];
}

std::vector<std::uint64_t> count_cycles(const FactorGraphInstance& inst, const std::vector<CycleSignature>& ys) {
  for (const auto& y : ys) {
    if (y.steps.empty()) throw ConfigError("signature: order must be at least 1");
    for (const auto& st : y.steps)
      if (st.s == st.t) throw ConfigError("signature: s_i must differ from t_i");
  }
  std::vector<std::uint64_t> out(ys.size(), 0);
  if (inst.constraints.empty()) return out;
  const Incidence inc(inst);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    for (const auto& st : ys[i].steps)
      if (static_cast<std::size_t>(std::max(st.s, st.t)) >= inst.constraints[0].vars.size())
        throw ConfigError("signature: position exceeds the instance arity");
    out[i] = count_one(inst, inc, ys[i]);
  }
  return out;
}

PoissonReport poisson_test(const ConstraintModel& model, double d, int n, const std::vector<CycleSignature>& ys,
                           const PoissonTestOptions& opts) {
  if (n < 1) throw ConfigError("poisson test: n must be positive");
  if (opts.trials < 2) throw ConfigError("poisson test: need at least 2 trials");
  const std::size_t s = ys.size();
  std::vector<double> expected(s);
  for (std::size_t i = 0; i < s; ++i) {
    const CycleConstants c = signature_constants(ys[i], d, model);
    expected[i] = opts.planted ? c.kappa_hat : c.kappa;
  }
  const auto trials = static_cast<std::size_t>(opts.trials);
  std::vector<std::uint64_t> counts(trials * s);
  parallel_for(trials, opts.threads, [&](std::size_t t) {
    Rng rng(opts.seed, t);
    const int m = sample_m(n, d, model.k(), rng);
    FactorGraphInstance g;
    if (opts.planted) {
      const auto sigma = balanced_assignment(n, model.q(), rng);
      g = sample_planted(n, m, model, sigma, rng);
    } else {
      g = sample_null(n, m, model, opts.simple, rng);
    }
    const auto c = count_cycles(g, ys);
    std::copy(c.begin(), c.end(), counts.begin() + static_cast<std::ptrdiff_t>(t * s));
  });
  PoissonReport rep;
  rep.n = n;
  rep.d = d;
  rep.trials = opts.trials;
  rep.planted = opts.planted;
  std::vector<double> means(s), sds(s);
  for (std::size_t i = 0; i < s; ++i) {
    RunningStat st;
    double chi2 = 0.0;
    std::uint64_t mx = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto c = counts[t * s + i];
      st.add(static_cast<double>(c));
      mx = std::max(mx, c);
    }
    SignatureStats ss;
    ss.signature = ys[i];
    ss.expected = expected[i];
    ss.mean = st.mean();
    ss.stderr = st.stderr_of_mean();
    ss.max_count = mx;
    // Poisson standard error when the sample is degenerate
    const double se = ss.stderr > 0.0 ? ss.stderr : std::sqrt(std::max(expected[i], 0.0) / static_cast<double>(trials));
    ss.z = se > 0.0 ? (ss.mean - expected[i]) / se : (ss.mean == expected[i] ? 0.0 : INFINITY);
    if (expected[i] > 0.0)
      for (std::size_t t = 0; t < trials; ++t) {
        const double x = static_cast<double>(counts[t * s + i]) - expected[i];
        chi2 += x * x / expected[i];
      }
    ss.chi2 = chi2;
    means[i] = ss.mean;
    sds[i] = std::sqrt(st.variance());
    rep.stats.push_back(ss);
  }
  rep.covariance.assign(s * s, 0.0);
  rep.covariance_stderr.assign(s * s, 0.0);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < trials; ++t)
        acc += (static_cast<double>(counts[t * s + i]) - means[i]) * (static_cast<double>(counts[t * s + j]) - means[j]);
      rep.covariance[i * s + j] = acc / static_cast<double>(trials - 1);
      rep.covariance_stderr[i * s + j] = sds[i] * sds[j] / std::sqrt(static_cast<double>(trials));
    }
  return rep;
}

double simplicity_probability(double d, int k) {
  return std::exp(-d * (k - 1) / 2.0 - (k == 2 ? d * d / 4.0 : 0.0));
}

FrequencyEstimate simplicity_frequency(int n, double d, const ConstraintModel& model, int trials, std::uint64_t seed) {
  if (trials < 1 || n < 1 || d < 0.0) throw ConfigError("simplicity: invalid arguments");
  const int m = static_cast<int>(std::lround(d * n / model.k()));
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed, static_cast<std::uint64_t>(t));
    hits += is_simple(sample_null(n, m, model, false, rng));
  }
  const double p = static_cast<double>(hits) / trials;
  return {p, std::sqrt(p * (1.0 - p) / trials), trials};
}

}  // namespace cspphase
