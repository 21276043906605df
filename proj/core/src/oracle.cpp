#include "cspphase/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cspphase/errors.hpp"
#include "cspphase/graphs.hpp"
#include "cspphase/parallel.hpp"

namespace cspphase {

namespace {

double state_count(int n, int q) { return std::pow(static_cast<double>(q), n); }

// Incrementally maintained factor values over a subset of free variables.
class Enumerator {
 public:
  Enumerator(const FactorGraphInstance& inst, const ConstraintModel& model)
      : inst_(inst), model_(model), q_(model.q()), k_(model.k()) {
    adj_.resize(static_cast<std::size_t>(inst.n));
    for (std::size_t a = 0; a < inst.constraints.size(); ++a) {
      const auto& vars = inst.constraints[a].vars;
      for (std::size_t i = 0; i < vars.size(); ++i) {
        if (std::find(vars.begin(), vars.begin() + static_cast<std::ptrdiff_t>(i), vars[i]) ==
            vars.begin() + static_cast<std::ptrdiff_t>(i))
          adj_[static_cast<std::size_t>(vars[i])].push_back(a);
      }
    }
    pins_.resize(static_cast<std::size_t>(inst.n));
    for (const auto& p : inst.pins) pins_[static_cast<std::size_t>(p.var)].push_back(p.value);
    tuple_.resize(static_cast<std::size_t>(k_));
  }

  // Enumerates the first `free` variables with the rest fixed to `tail`.
  template <class Visit>
  void run(int free, std::span<const int> tail, Visit&& visit) {
    const int n = inst_.n;
    sigma_.assign(static_cast<std::size_t>(n), 0);
    for (int i = free; i < n; ++i) sigma_[static_cast<std::size_t>(i)] = tail[static_cast<std::size_t>(i - free)];
    code_ = 0;
    std::uint64_t pw = 1;
    pow_.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      pow_[static_cast<std::size_t>(i)] = pw;
      code_ += pw * static_cast<std::uint64_t>(sigma_[static_cast<std::size_t>(i)]);
      pw *= static_cast<std::uint64_t>(q_);
    }
    val_.assign(inst_.constraints.size(), 0.0);
    zeros_ = 0;
    for (std::size_t a = 0; a < val_.size(); ++a) {
      val_[a] = eval(a);
      if (val_[a] == 0.0) ++zeros_;
    }
    bad_pins_ = 0;
    for (int i = 0; i < n; ++i) bad_pins_ += pin_violations(i);

    // Knuth's loopless reflected mixed-radix Gray code.
    std::vector<int> f(static_cast<std::size_t>(free) + 1), o(static_cast<std::size_t>(free), 1);
    std::iota(f.begin(), f.end(), 0);
    for (;;) {
      if (zeros_ == 0 && bad_pins_ == 0) {
        double w = 1.0;
        for (double x : val_) w *= x;
        if (w > 0.0) visit(std::span<const int>(sigma_), w, code_);
      }
      const int j = f[0];
      f[0] = 0;
      if (j == free) break;
      const int next = sigma_[static_cast<std::size_t>(j)] + o[static_cast<std::size_t>(j)];
      set(j, next);
      if (next == 0 || next == q_ - 1) {
        o[static_cast<std::size_t>(j)] = -o[static_cast<std::size_t>(j)];
        f[static_cast<std::size_t>(j)] = f[static_cast<std::size_t>(j) + 1];
        f[static_cast<std::size_t>(j) + 1] = j + 1;
      }
    }
  }

 private:
  double eval(std::size_t a) {
    const auto& c = inst_.constraints[a];
    for (int i = 0; i < k_; ++i) tuple_[static_cast<std::size_t>(i)] = sigma_[static_cast<std::size_t>(c.vars[static_cast<std::size_t>(i)])];
    return model_.value(c.w, tuple_);
  }

  int pin_violations(int v) const {
    int bad = 0;
    for (int p : pins_[static_cast<std::size_t>(v)]) bad += p != sigma_[static_cast<std::size_t>(v)];
    return bad;
  }

  void set(int v, int value) {
    bad_pins_ -= pin_violations(v);
    code_ += pow_[static_cast<std::size_t>(v)] * static_cast<std::uint64_t>(value);
    code_ -= pow_[static_cast<std::size_t>(v)] * static_cast<std::uint64_t>(sigma_[static_cast<std::size_t>(v)]);
    sigma_[static_cast<std::size_t>(v)] = value;
    bad_pins_ += pin_violations(v);
    for (std::size_t a : adj_[static_cast<std::size_t>(v)]) {
      const double old = val_[a];
      const double now = eval(a);
      zeros_ += (now == 0.0) - (old == 0.0);
      val_[a] = now;
    }
  }

  const FactorGraphInstance& inst_;
  const ConstraintModel& model_;
  int q_;
  int k_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<std::vector<int>> pins_;
  std::vector<int> sigma_;
  std::vector<int> tuple_;
  std::vector<double> val_;
  std::vector<std::uint64_t> pow_;
  std::uint64_t code_ = 0;
  int zeros_ = 0;
  int bad_pins_ = 0;
};

void guard(const FactorGraphInstance& inst, const ConstraintModel& model, const EnumerationOptions& opts) {
  validate_instance(inst, model);
  if (state_count(inst.n, model.q()) > static_cast<double>(opts.max_states))
    throw SizeGuardError("exact enumeration: q^n exceeds the configured limit");
}

}  // namespace

void for_each_assignment(const FactorGraphInstance& inst, const ConstraintModel& model,
                         const std::function<void(std::span<const int>, double)>& visit,
                         const EnumerationOptions& opts) {
  guard(inst, model, opts);
  Enumerator e(inst, model);
  e.run(inst.n, {}, [&](std::span<const int> s, double w, std::uint64_t) { visit(s, w); });
}

long double partition_function(const FactorGraphInstance& inst, const ConstraintModel& model,
                               const EnumerationOptions& opts) {
  guard(inst, model, opts);
  const int q = model.q();
  const int fixed = std::min(inst.n - 1, 3);
  const std::size_t chunks = ipow(static_cast<std::size_t>(q), fixed);
  std::vector<long double> partial(chunks, 0.0L);
  parallel_for(chunks, opts.threads, [&](std::size_t c) {
    std::vector<int> tail(static_cast<std::size_t>(fixed));
    WeightTable::tuple_of(c, q, tail);
    Enumerator e(inst, model);
    long double z = 0.0L;
    e.run(inst.n - fixed, tail, [&](std::span<const int>, double w, std::uint64_t) { z += w; });
    partial[c] = z;
  });
  long double z = 0.0L;
  for (long double p : partial) z += p;
  return z;
}

BoltzmannTable boltzmann_table(const FactorGraphInstance& inst, const ConstraintModel& model,
                               const EnumerationOptions& opts) {
  guard(inst, model, opts);
  BoltzmannTable t;
  t.n = inst.n;
  t.q = model.q();
  t.marginals.assign(static_cast<std::size_t>(inst.n), std::vector<double>(static_cast<std::size_t>(t.q), 0.0));
  std::vector<long double> marg(static_cast<std::size_t>(inst.n * t.q), 0.0L);
  long double running = 0.0L;
  Enumerator e(inst, model);
  e.run(inst.n, {}, [&](std::span<const int> s, double w, std::uint64_t code) {
    if (t.support.size() >= (std::size_t{1} << 25)) throw SizeGuardError("boltzmann table: support too large");
    running += w;
    t.support.push_back(code);
    t.cumulative.push_back(static_cast<double>(running));
    for (int i = 0; i < inst.n; ++i) marg[static_cast<std::size_t>(i * t.q + s[static_cast<std::size_t>(i)])] += w;
  });
  t.z = running;
  if (t.z > 0.0L) {
    for (int i = 0; i < inst.n; ++i)
      for (int a = 0; a < t.q; ++a)
        t.marginals[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] =
            static_cast<double>(marg[static_cast<std::size_t>(i * t.q + a)] / t.z);
  }
  return t;
}

std::vector<int> decode_assignment(std::uint64_t code, int n, int q) {
  std::vector<int> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    s[static_cast<std::size_t>(i)] = static_cast<int>(code % static_cast<std::uint64_t>(q));
    code /= static_cast<std::uint64_t>(q);
  }
  return s;
}

std::vector<int> sample_boltzmann(const BoltzmannTable& table, Rng& rng) {
  if (table.support.empty()) throw NumericRefusal("boltzmann sampler: Z = 0");
  const double u = rng.uniform() * table.cumulative.back();
  auto it = std::upper_bound(table.cumulative.begin(), table.cumulative.end(), u);
  if (it == table.cumulative.end()) --it;
  return decode_assignment(table.support[static_cast<std::size_t>(it - table.cumulative.begin())], table.n, table.q);
}

std::vector<double> pair_marginals(const FactorGraphInstance& inst, const ConstraintModel& model,
                                   const EnumerationOptions& opts) {
  guard(inst, model, opts);
  const int n = inst.n;
  const int q = model.q();
  std::vector<long double> acc(static_cast<std::size_t>(n * n * q * q), 0.0L);
  long double z = 0.0L;
  Enumerator e(inst, model);
  e.run(n, {}, [&](std::span<const int> s, double w, std::uint64_t) {
    z += w;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        acc[static_cast<std::size_t>(((i * n + j) * q + s[static_cast<std::size_t>(i)]) * q + s[static_cast<std::size_t>(j)])] += w;
  });
  if (!(z > 0.0L)) throw NumericRefusal("pair marginals: Z = 0");
  std::vector<double> out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<double>(acc[i] / z);
  return out;
}

double epsilon_symmetry(const FactorGraphInstance& inst, const ConstraintModel& model,
                        const EnumerationOptions& opts) {
  const int n = inst.n;
  const int q = model.q();
  if (n < 2) return 0.0;
  const auto pm = pair_marginals(inst, model, opts);
  auto single = [&](int i, int a) {
    double s = 0.0;
    for (int b = 0; b < q; ++b) s += pm[static_cast<std::size_t>(((i * n + i) * q + a) * q + b)];
    return s;
  };
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double tv = 0.0;
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b)
          tv += std::abs(pm[static_cast<std::size_t>(((i * n + j) * q + a) * q + b)] - single(i, a) * single(j, b));
      total += 0.5 * tv;
    }
  }
  return 2.0 * total / (static_cast<double>(n) * (n - 1));
}

namespace {

double overlap_tv(std::span<const int> s, std::span<const int> t, int q, std::vector<int>& counts) {
  std::fill(counts.begin(), counts.end(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) ++counts[static_cast<std::size_t>(s[i] * q + t[i])];
  const double n = static_cast<double>(s.size());
  const double u = 1.0 / (q * q);
  double tv = 0.0;
  for (int c : counts) tv += std::abs(c / n - u);
  return 0.5 * tv;
}

}  // namespace

OverlapResult overlap_statistic(const BoltzmannTable& table, std::uint64_t seed, std::size_t mc_pairs,
                                std::uint64_t exact_pair_limit) {
  if (table.support.empty()) throw NumericRefusal("overlap: Z = 0");
  const int q = table.q;
  const int n = table.n;
  std::vector<int> counts(static_cast<std::size_t>(q * q));
  const std::size_t s = table.support.size();
  OverlapResult r;
  if (static_cast<double>(s) * static_cast<double>(s) <= static_cast<double>(exact_pair_limit)) {
    std::vector<std::vector<int>> decoded;
    std::vector<double> w(s);
    decoded.reserve(s);
    double prev = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      decoded.push_back(decode_assignment(table.support[i], n, q));
      w[i] = table.cumulative[i] - prev;
      prev = table.cumulative[i];
    }
    const long double z = table.z;
    long double acc = 0.0L;
    for (std::size_t i = 0; i < s; ++i) {
      long double row = 0.0L;
      for (std::size_t j = 0; j < s; ++j) row += w[j] * overlap_tv(decoded[i], decoded[j], q, counts);
      acc += w[i] * row;
    }
    r.value = static_cast<double>(acc / (z * z));
    r.exact = true;
    return r;
  }
  Rng rng(seed, 0x0e1);
  RunningStat st;
  for (std::size_t p = 0; p < mc_pairs; ++p) {
    const auto a = sample_boltzmann(table, rng);
    const auto b = sample_boltzmann(table, rng);
    st.add(overlap_tv(a, b, q, counts));
  }
  r.value = st.mean();
  r.stderr = st.stderr_of_mean();
  return r;
}

// ---------------------------------------------------------------------------

NishimoriReport nishimori_check(int n, int m, const ConstraintModel& model, int trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("nishimori: trials must be positive");
  const int k = model.k();
  const double log_ez = log_first_moment_exact(n, m, model);
  NishimoriReport rep;
  Rng rng(seed, 0x415);
  for (int t = 0; t < trials; ++t) {
    const auto sigma = sample_sigma_hat(n, m, model, rng);
    const FactorGraphInstance g = sample_planted(n, m, model, sigma, rng);
    const double log_phi = std::log(phi_first(model, color_density(sigma, model.q())));

    // Pr[Sigma_hat = sigma] Pr[G*(sigma) = G]
    double log_lhs = m * log_phi - log_ez;
    std::vector<int> tuple(static_cast<std::size_t>(k));
    double log_null = 0.0;  // Pr[G(n, m) = G]
    double log_psi = 0.0;
    for (const auto& c : g.constraints) {
      for (int i = 0; i < k; ++i) tuple[static_cast<std::size_t>(i)] = sigma[static_cast<std::size_t>(c.vars[static_cast<std::size_t>(i)])];
      const double psi = model.value(c.w, tuple);
      const double lp = std::log(model.function_prob(c.w));
      log_lhs += std::log(psi) + lp - k * std::log(static_cast<double>(n)) - log_phi;
      log_null += lp - k * std::log(static_cast<double>(n));
      log_psi += std::log(psi);
    }
    // mu_G(sigma) Pr[G_hat = G] with Pr[G_hat = G] = Z(G) Pr[G(n, m) = G] / E[Z]
    const double log_z = std::log(static_cast<double>(partition_function(g, model)));
    const double log_mu = log_psi - log_z;
    const double log_rhs = log_mu + (log_z + log_null - log_ez);
    const double rel = std::abs(std::expm1(log_lhs - log_rhs));
    rep.trials.push_back({log_lhs, log_rhs, rel});
    rep.max_rel_error = std::max(rep.max_rel_error, rel);
  }
  return rep;
}

}  // namespace cspphase
