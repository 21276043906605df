#include "cspphase/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_set>

#include "cspphase/errors.hpp"

namespace cspphase {

namespace {

struct VecHash {
  std::size_t operator()(const std::vector<int>& v) const {
    std::size_t h = 1469598103934665603ULL;
    for (int x : v) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ULL;
    return h;
  }
};

}  // namespace

int sample_m(int n, double d, int k, Rng& rng) {
  if (n <= 0 || d < 0.0 || k < 1) throw ConfigError("sample_m: invalid arguments");
  return rng.poisson(d * n / k);
}

FactorGraphInstance sample_null(int n, int m, const ConstraintModel& model, bool simple, Rng& rng) {
  if (n <= 0 || m < 0) throw ConfigError("sample_null: need n > 0 and m >= 0");
  const int k = model.k();
  FactorGraphInstance inst;
  inst.n = n;
  inst.constraints.reserve(static_cast<std::size_t>(m));
  if (!simple) {
    for (int a = 0; a < m; ++a) {
      Constraint c;
      c.vars.resize(static_cast<std::size_t>(k));
      for (int& v : c.vars) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      c.w = model.sample_function(rng);
      inst.constraints.push_back(std::move(c));
    }
    return inst;
  }
  if (n < k) throw ConfigError("sample_null: simple mode needs n >= k");
  std::unordered_set<std::vector<int>, VecHash> used;
  const std::uint64_t budget = 10000ULL * static_cast<std::uint64_t>(std::max(m, 1));
  std::uint64_t attempts = 0;
  for (int a = 0; a < m; ++a) {
    for (;;) {
      if (++attempts > budget) throw SizeGuardError("sample_null: simple sampling exhausted its retry budget");
      std::vector<int> vars(static_cast<std::size_t>(k));
      for (int& v : vars) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      std::vector<int> key = vars;
      std::sort(key.begin(), key.end());
      if (std::adjacent_find(key.begin(), key.end()) != key.end()) continue;
      if (!used.insert(key).second) continue;
      inst.constraints.push_back({std::move(vars), model.sample_function(rng)});
      break;
    }
  }
  return inst;
}

bool is_simple(const FactorGraphInstance& inst) {
  std::unordered_set<std::vector<int>, VecHash> seen;
  for (const auto& c : inst.constraints) {
    std::vector<int> key = c.vars;
    std::sort(key.begin(), key.end());
    if (std::adjacent_find(key.begin(), key.end()) != key.end()) return false;
    if (!seen.insert(key).second) return false;
  }
  return true;
}

std::vector<double> color_density(std::span<const int> sigma, int q) {
  std::vector<double> rho(static_cast<std::size_t>(q), 0.0);
  for (int v : sigma) rho[static_cast<std::size_t>(v)] += 1.0;
  for (double& x : rho) x /= static_cast<double>(sigma.size());
  return rho;
}

FactorGraphInstance sample_planted(int n, int m, const ConstraintModel& model, std::span<const int> sigma, Rng& rng) {
  if (static_cast<int>(sigma.size()) != n) throw ConfigError("sample_planted: assignment length mismatch");
  const int q = model.q();
  const int k = model.k();
  std::vector<std::vector<int>> classes(static_cast<std::size_t>(q));
  for (int i = 0; i < n; ++i) {
    const int v = sigma[static_cast<std::size_t>(i)];
    if (v < 0 || v >= q) throw ConfigError("sample_planted: value out of range");
    classes[static_cast<std::size_t>(v)].push_back(i);
  }
  const auto& e = model.expected_table();
  std::vector<double> pattern_weight(e.size());
  std::vector<int> tuple(static_cast<std::size_t>(k));
  for (std::size_t idx = 0; idx < e.size(); ++idx) {
    WeightTable::tuple_of(idx, q, tuple);
    double w = e[idx];
    for (int c : tuple) w *= static_cast<double>(classes[static_cast<std::size_t>(c)].size());
    pattern_weight[idx] = w;
  }
  if (!(std::accumulate(pattern_weight.begin(), pattern_weight.end(), 0.0) > 0.0))
    throw ConfigError("sample_planted: assignment has zero planted weight");
  const AliasTable patterns(pattern_weight);

  // psi given the colour pattern
  std::map<std::size_t, AliasTable> conditional;
  FactorGraphInstance inst;
  inst.n = n;
  inst.constraints.reserve(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) {
    const std::size_t pat = patterns.sample(rng);
    WeightTable::tuple_of(pat, q, tuple);
    std::uint64_t f;
    if (model.closure() == Closure::kExplicit) {
      auto it = conditional.find(pat);
      if (it == conditional.end()) {
        std::vector<double> w(model.base().size());
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = model.base()[j].prob * model.base()[j].table[pat];
        it = conditional.emplace(pat, AliasTable(w)).first;
      }
      f = it->second.sample(rng);
    } else {
      do {
        f = model.sample_function(rng);
      } while (!(rng.uniform() < model.value(f, tuple)));
    }
    Constraint c;
    c.w = f;
    c.vars.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      const auto& cls = classes[static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])];
      c.vars[static_cast<std::size_t>(i)] = cls[rng.below(cls.size())];
    }
    inst.constraints.push_back(std::move(c));
  }
  return inst;
}

std::vector<int> balanced_assignment(int n, int q, Rng& rng) {
  std::vector<int> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = i % q;
  std::shuffle(s.begin(), s.end(), rng.engine());
  return s;
}

std::vector<int> sample_sigma_hat(int n, int m, const ConstraintModel& model, Rng& rng) {
  const int q = model.q();
  if (n <= 0 || m < 0) throw ConfigError("sample_sigma_hat: invalid sizes");
  // number of compositions of n into q parts
  double comps = 1.0;
  for (int i = 1; i < q; ++i) comps = comps * (n + i) / i;
  if (comps > 1e7) throw SizeGuardError("sample_sigma_hat: composition lattice too large");
  std::vector<std::vector<int>> list;
  std::vector<double> logw;
  std::vector<int> c(static_cast<std::size_t>(q));
  std::vector<double> rho(static_cast<std::size_t>(q));
  auto rec = [&](auto& self, int i, int left) -> void {
    if (i == q - 1) {
      c[static_cast<std::size_t>(i)] = left;
      double lw = std::lgamma(n + 1.0);
      for (int j = 0; j < q; ++j) {
        lw -= std::lgamma(c[static_cast<std::size_t>(j)] + 1.0);
        rho[static_cast<std::size_t>(j)] = static_cast<double>(c[static_cast<std::size_t>(j)]) / n;
      }
      const double p = phi_first(model, rho);
      if (p <= 0.0 && m > 0) return;
      lw += m > 0 ? m * std::log(p) : 0.0;
      list.push_back(c);
      logw.push_back(lw);
      return;
    }
    for (int x = 0; x <= left; ++x) {
      c[static_cast<std::size_t>(i)] = x;
      self(self, i + 1, left - x);
    }
  };
  rec(rec, 0, n);
  if (list.empty()) throw ConfigError("sample_sigma_hat: all compositions have zero weight");
  const double mx = *std::max_element(logw.begin(), logw.end());
  std::vector<double> w(logw.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logw[i] - mx);
  const auto& chosen = list[AliasTable(w).sample(rng)];
  std::vector<int> sigma;
  sigma.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < q; ++j) sigma.insert(sigma.end(), static_cast<std::size_t>(chosen[static_cast<std::size_t>(j)]), j);
  std::shuffle(sigma.begin(), sigma.end(), rng.engine());
  return sigma;
}

PinResult pin(const FactorGraphInstance& inst, int theta_max,
              const std::function<std::vector<int>(Rng&)>& sampler, Rng& rng) {
  if (theta_max < 0) throw ConfigError("pin: theta_max must be non-negative");
  PinResult out;
  out.instance = inst;
  out.theta = static_cast<int>(rng.below(static_cast<std::uint64_t>(theta_max) + 1));
  const int count = std::min(out.theta, inst.n);
  std::vector<int> vars(static_cast<std::size_t>(inst.n));
  std::iota(vars.begin(), vars.end(), 0);
  std::shuffle(vars.begin(), vars.end(), rng.engine());
  vars.resize(static_cast<std::size_t>(count));
  std::sort(vars.begin(), vars.end());
  if (count > 0) {
    const auto check = sampler(rng);
    for (int v : vars) out.instance.pins.push_back({v, check[static_cast<std::size_t>(v)]});
  }
  out.pinned = std::move(vars);
  return out;
}

GWTree sample_gw_tree(double d, const ConstraintModel& model, int generations, Rng& rng, std::size_t max_nodes) {
  if (d < 0.0 || generations < 0) throw ConfigError("gw tree: invalid parameters");
  GWTree t;
  t.q = model.q();
  t.k = model.k();
  t.generations = generations;
  t.var_depth.push_back(0);
  for (std::size_t v = 0; v < t.var_depth.size(); ++v) {
    const int depth = t.var_depth[v];
    const int kids = depth < generations ? rng.poisson(d) : 0;
    t.var_first_child.push_back(static_cast<int>(t.con_parent.size()));
    t.var_child_count.push_back(kids);
    for (int c = 0; c < kids; ++c) {
      t.con_parent.push_back(static_cast<int>(v));
      t.con_position.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(t.k))));
      t.con_function.push_back(model.sample_function(rng));
      t.con_first_child.push_back(static_cast<int>(t.var_depth.size()));
      for (int j = 0; j + 1 < t.k; ++j) t.var_depth.push_back(depth + 1);
      if (t.var_depth.size() + t.con_parent.size() > max_nodes)
        throw SizeGuardError("gw tree: node budget exceeded");
    }
  }
  return t;
}

void broadcast(GWTree& t, const ConstraintModel& model, Rng& rng) {
  const int q = t.q;
  const int k = t.k;
  t.values.assign(t.variables(), 0);
  t.values[0] = static_cast<int>(rng.below(static_cast<std::uint64_t>(q)));
  const std::size_t combos = ipow(static_cast<std::size_t>(q), k - 1);
  std::vector<double> w(combos);
  std::vector<int> rest(static_cast<std::size_t>(k - 1)), tuple(static_cast<std::size_t>(k));
  for (std::size_t a = 0; a < t.constraints(); ++a) {
    const int h = t.con_position[a];
    const int x = t.values[static_cast<std::size_t>(t.con_parent[a])];
    double total = 0.0;
    for (std::size_t r = 0; r < combos; ++r) {
      WeightTable::tuple_of(r, q, rest);
      for (int i = 0, j = 0; i < k; ++i) tuple[static_cast<std::size_t>(i)] = i == h ? x : rest[static_cast<std::size_t>(j++)];
      w[r] = model.value(t.con_function[a], tuple);
      total += w[r];
    }
    if (!(total > 0.0)) throw NumericRefusal("broadcast: parent value has no extension");
    double u = rng.uniform() * total;
    std::size_t pick = combos - 1;
    for (std::size_t r = 0; r < combos; ++r) {
      u -= w[r];
      if (u < 0.0) {
        pick = r;
        break;
      }
    }
    while (w[pick] == 0.0 && pick > 0) --pick;
    WeightTable::tuple_of(pick, q, rest);
    for (int j = 0; j + 1 < k; ++j)
      t.values[static_cast<std::size_t>(t.con_first_child[a] + j)] = rest[static_cast<std::size_t>(j)];
  }
}

}  // namespace cspphase
