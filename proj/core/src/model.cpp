#include "cspphase/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>

#include "cspphase/errors.hpp"
#include "cspphase/spectral.hpp"

namespace cspphase {

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

WeightTable::WeightTable(int q, int k, std::vector<double> values)
    : q_(q), k_(k), values_(std::move(values)) {
  if (q < 2) throw ConfigError("weight table: q must be at least 2");
  if (k < 1) throw ConfigError("weight table: k must be at least 1");
  if (values_.size() != ipow(static_cast<std::size_t>(q), k))
    throw ConfigError("weight table: expected q^k entries");
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("weight table: entries must lie in [0,1]");
  }
}

std::size_t WeightTable::index_of(std::span<const int> tuple, int q) {
  std::size_t idx = 0;
  for (int v : tuple) idx = idx * static_cast<std::size_t>(q) + static_cast<std::size_t>(v);
  return idx;
}

void WeightTable::tuple_of(std::size_t index, int q, std::span<int> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<int>(index % static_cast<std::size_t>(q));
    index /= static_cast<std::size_t>(q);
  }
}

double WeightTable::row_sum(int position, int value) const {
  const std::size_t stride = ipow(static_cast<std::size_t>(q_), k_ - 1 - position);
  double s = 0.0;
  for (std::size_t idx = 0; idx < values_.size(); ++idx) {
    if (static_cast<int>((idx / stride) % static_cast<std::size_t>(q_)) == value) s += values_[idx];
  }
  return s;
}

double WeightTable::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

// ---------------------------------------------------------------------------

AliasTable::AliasTable(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw ConfigError("alias table: empty distribution");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw ConfigError("alias table: total weight must be positive");
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
  for (std::size_t i : small) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
}

std::size_t AliasTable::sample(Rng& rng) const {
  const std::size_t i = rng.below(prob_.size());
  return rng.uniform() < prob_[i] ? i : alias_[i];
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t checked_factorial(int k) {
  std::uint64_t f = 1;
  for (int i = 2; i <= k; ++i) {
    if (f > UINT64_MAX / static_cast<std::uint64_t>(i)) throw ConfigError("closure too large");
    f *= static_cast<std::uint64_t>(i);
  }
  return f;
}

void unrank_permutation(std::uint64_t rank, int k, std::vector<int>& perm) {
  std::vector<int> pool(static_cast<std::size_t>(k));
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<std::uint64_t> fact(static_cast<std::size_t>(k) + 1, 1);
  for (int i = 1; i <= k; ++i) fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i - 1)] * static_cast<std::uint64_t>(i);
  perm.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const std::uint64_t f = fact[static_cast<std::size_t>(k - 1 - i)];
    const std::uint64_t digit = rank / f;
    rank %= f;
    perm[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(digit)];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(digit));
  }
}

}  // namespace

ConstraintModel::ConstraintModel(int q, int k, std::vector<WeightEntry> weights, std::string name,
                                 Closure closure)
    : q_(q), k_(k), weights_(std::move(weights)), name_(std::move(name)), closure_(closure) {
  if (q < 2) throw ConfigError("model: q must be at least 2");
  if (k < 1) throw ConfigError("model: k must be at least 1");
  if (weights_.empty()) throw ConfigError("model: no weight functions");
  double total = 0.0;
  for (const auto& w : weights_) {
    if (w.table.q() != q || w.table.k() != k) throw ConfigError("model: table shape mismatch");
    if (!(w.prob > 0.0)) throw ConfigError("model: probabilities must be positive");
    total += w.prob;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("model: probabilities must sum to 1");
  for (auto& w : weights_) w.prob /= total;

  if (closure_ == Closure::kSignPermutation) {
    if (q != 2) throw ConfigError("model: sign/permutation closure requires q = 2");
    if (k > 20) throw ConfigError("model: closure arity too large");
    perm_count_ = checked_factorial(k);
    const std::uint64_t per_base = perm_count_;
    if (per_base > (UINT64_MAX >> k) / weights_.size()) throw ConfigError("closure too large");
    function_count_ = weights_.size() * (per_base << k);
  } else {
    function_count_ = weights_.size();
  }

  std::vector<double> probs;
  probs.reserve(weights_.size());
  for (const auto& w : weights_) probs.push_back(w.prob);
  base_sampler_ = AliasTable(probs);

  const std::size_t cells = ipow(static_cast<std::size_t>(q), k);
  expected_.assign(cells, 0.0);
  if (closure_ == Closure::kExplicit) {
    for (const auto& w : weights_) {
      for (std::size_t i = 0; i < cells; ++i) expected_[i] += w.prob * w.table[i];
    }
  } else {
    // Sign flips alone act transitively on {0,1}^k.
    double m = 0.0;
    for (const auto& w : weights_) m += w.prob * w.table.mean();
    std::fill(expected_.begin(), expected_.end(), m);
  }
  xi_ = std::accumulate(expected_.begin(), expected_.end(), 0.0) / static_cast<double>(cells);
  if (!(xi_ > 0.0)) throw ConfigError("model: xi must be positive");
  color_symmetric_ = compute_color_symmetry();
}

double ConstraintModel::function_prob(std::uint64_t f) const {
  if (closure_ == Closure::kExplicit) return weights_.at(f).prob;
  const std::uint64_t per_base = perm_count_ << k_;
  return weights_.at(f / per_base).prob / static_cast<double>(per_base);
}

void ConstraintModel::decode(std::uint64_t f, std::size_t& base, std::vector<int>& perm,
                             std::uint64_t& mask) const {
  mask = f & ((std::uint64_t{1} << k_) - 1);
  const std::uint64_t rest = f >> k_;
  base = static_cast<std::size_t>(rest / perm_count_);
  unrank_permutation(rest % perm_count_, k_, perm);
}

std::size_t ConstraintModel::mapped_index(std::span<const int> tuple, const std::vector<int>& perm,
                                          std::uint64_t mask) const {
  std::size_t idx = 0;
  for (int i = 0; i < k_; ++i) {
    const int bit = static_cast<int>((mask >> i) & 1U);
    idx = (idx << 1) | static_cast<std::size_t>(tuple[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] ^ bit);
  }
  return idx;
}

double ConstraintModel::value(std::uint64_t f, std::span<const int> tuple) const {
  if (closure_ == Closure::kExplicit) return weights_[f].table.at(tuple);
  std::size_t b;
  std::vector<int> perm;
  std::uint64_t mask;
  decode(f, b, perm, mask);
  return weights_[b].table[mapped_index(tuple, perm, mask)];
}

double ConstraintModel::value_at(std::uint64_t f, std::size_t flat_index) const {
  if (closure_ == Closure::kExplicit) return weights_[f].table[flat_index];
  std::vector<int> tuple(static_cast<std::size_t>(k_));
  WeightTable::tuple_of(flat_index, q_, tuple);
  return value(f, tuple);
}

WeightTable ConstraintModel::materialize(std::uint64_t f) const {
  if (closure_ == Closure::kExplicit) return weights_.at(f).table;
  if (f >= function_count_) throw ConfigError("model: function index out of range");
  std::size_t b;
  std::vector<int> perm;
  std::uint64_t mask;
  decode(f, b, perm, mask);
  const std::size_t cells = ipow(2, k_);
  std::vector<double> vals(cells);
  std::vector<int> tuple(static_cast<std::size_t>(k_));
  for (std::size_t idx = 0; idx < cells; ++idx) {
    WeightTable::tuple_of(idx, 2, tuple);
    vals[idx] = weights_[b].table[mapped_index(tuple, perm, mask)];
  }
  return WeightTable(2, k_, std::move(vals));
}

std::uint64_t ConstraintModel::sample_function(Rng& rng) const {
  const std::size_t b = base_sampler_.sample(rng);
  if (closure_ == Closure::kExplicit) return b;
  const std::uint64_t per_base = perm_count_ << k_;
  return static_cast<std::uint64_t>(b) * per_base + rng.below(per_base);
}

const std::vector<double>& ConstraintModel::pair_expectation() const {
  if (pair_expectation_) return *pair_expectation_;
  const std::size_t cells = ipow(static_cast<std::size_t>(q_), k_);
  if (cells > (std::size_t{1} << 12)) throw SizeGuardError("pair expectation: q^k too large");
  std::vector<double> pe(cells * cells, 0.0);
  if (closure_ == Closure::kExplicit) {
    for (const auto& w : weights_) {
      for (std::size_t s = 0; s < cells; ++s) {
        const double a = w.table[s];
        if (a == 0.0) continue;
        for (std::size_t t = 0; t < cells; ++t) pe[s * cells + t] += w.prob * a * w.table[t];
      }
    }
  } else {
    // E[psi(s) psi(t)] depends only on the Hamming weight of s xor t.
    std::vector<double> by_weight(static_cast<std::size_t>(k_) + 1, 0.0);
    std::vector<double> count(static_cast<std::size_t>(k_) + 1, 0.0);
    for (std::size_t x = 0; x < cells; ++x) count[static_cast<std::size_t>(std::popcount(x))] += 1.0;
    for (const auto& w : weights_) {
      for (std::size_t x = 0; x < cells; ++x) {
        double c = 0.0;
        for (std::size_t u = 0; u < cells; ++u) c += w.table[u] * w.table[u ^ x];
        c /= static_cast<double>(cells);
        by_weight[static_cast<std::size_t>(std::popcount(x))] += w.prob * c;
      }
    }
    for (std::size_t i = 0; i <= static_cast<std::size_t>(k_); ++i) by_weight[i] /= count[i];
    for (std::size_t s = 0; s < cells; ++s)
      for (std::size_t t = 0; t < cells; ++t)
        pe[s * cells + t] = by_weight[static_cast<std::size_t>(std::popcount(s ^ t))];
  }
  pair_expectation_ = std::move(pe);
  return *pair_expectation_;
}

const std::vector<std::pair<double, DenseMatrix>>& ConstraintModel::phi_orbit() const {
  if (phi_orbit_) return *phi_orbit_;
  if (k_ < 2) throw ConfigError("model: Phi requires arity at least 2");
  std::vector<std::pair<double, DenseMatrix>> orbit;
  if (closure_ == Closure::kExplicit) {
    for (const auto& w : weights_) orbit.emplace_back(w.prob, phi_matrix(w.table, 0, 1, xi_));
  } else {
    const double pairs = static_cast<double>(k_) * (k_ - 1) * 4.0;
    for (const auto& w : weights_) {
      for (int a = 0; a < k_; ++a) {
        for (int c = 0; c < k_; ++c) {
          if (a == c) continue;
          const DenseMatrix base = phi_matrix(w.table, a, c, xi_);
          for (int fa = 0; fa < 2; ++fa) {
            for (int fc = 0; fc < 2; ++fc) {
              DenseMatrix m(2, 2);
              for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y)
                  m(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) =
                      base(static_cast<std::size_t>(x ^ fa), static_cast<std::size_t>(y ^ fc));
              orbit.emplace_back(w.prob / pairs, std::move(m));
            }
          }
        }
      }
    }
  }
  phi_orbit_ = std::move(orbit);
  return *phi_orbit_;
}

bool ConstraintModel::compute_color_symmetry() const {
  if (closure_ == Closure::kSignPermutation) return true;
  // Adjacent transpositions generate the symmetric group.
  std::map<std::vector<double>, double> mass;
  for (const auto& w : weights_) {
    std::vector<double> v(w.table.values().begin(), w.table.values().end());
    mass[v] += w.prob;
  }
  const std::size_t cells = ipow(static_cast<std::size_t>(q_), k_);
  std::vector<int> tuple(static_cast<std::size_t>(k_));
  for (int c = 0; c + 1 < q_; ++c) {
    std::map<std::vector<double>, double> moved;
    for (const auto& [vals, p] : mass) {
      std::vector<double> out(cells);
      for (std::size_t idx = 0; idx < cells; ++idx) {
        WeightTable::tuple_of(idx, q_, tuple);
        for (int& v : tuple) v = v == c ? c + 1 : (v == c + 1 ? c : v);
        out[WeightTable::index_of(tuple, q_)] = vals[idx];
      }
      moved[out] += p;
    }
    if (moved.size() != mass.size()) return false;
    for (auto it = moved.begin(), jt = mass.begin(); it != moved.end(); ++it, ++jt) {
      if (it->first != jt->first || std::abs(it->second - jt->second) > 1e-12) return false;
    }
  }
  return true;
}

std::uint64_t ConstraintModel::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const int header[3] = {q_, k_, static_cast<int>(closure_)};
  feed(header, sizeof header);
  for (const auto& w : weights_) {
    feed(&w.prob, sizeof w.prob);
    for (double v : w.table.values()) feed(&v, sizeof v);
  }
  return h;
}

// ---------------------------------------------------------------------------

double phi_first(const ConstraintModel& model, std::span<const double> mu) {
  const int q = model.q();
  const int k = model.k();
  if (mu.size() != static_cast<std::size_t>(q)) throw ConfigError("phi: mu must have q entries");
  const auto& e = model.expected_table();
  std::vector<int> tuple(static_cast<std::size_t>(k));
  double s = 0.0;
  for (std::size_t idx = 0; idx < e.size(); ++idx) {
    if (e[idx] == 0.0) continue;
    WeightTable::tuple_of(idx, q, tuple);
    double p = e[idx];
    for (int v : tuple) p *= mu[static_cast<std::size_t>(v)];
    s += p;
  }
  return s;
}

double phi_second(const ConstraintModel& model, std::span<const double> rho) {
  const int q = model.q();
  const int k = model.k();
  if (rho.size() != static_cast<std::size_t>(q * q)) throw ConfigError("phi: rho must be q x q");
  const auto& pe = model.pair_expectation();
  const std::size_t cells = model.expected_table().size();
  std::vector<int> s(static_cast<std::size_t>(k)), t(static_cast<std::size_t>(k));
  double total = 0.0;
  for (std::size_t a = 0; a < cells; ++a) {
    WeightTable::tuple_of(a, q, s);
    for (std::size_t b = 0; b < cells; ++b) {
      const double w = pe[a * cells + b];
      if (w == 0.0) continue;
      WeightTable::tuple_of(b, q, t);
      double p = w;
      for (int i = 0; i < k; ++i) p *= rho[static_cast<std::size_t>(s[static_cast<std::size_t>(i)] * q + t[static_cast<std::size_t>(i)])];
      total += p;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------

void validate_instance(const FactorGraphInstance& inst, const ConstraintModel& model) {
  if (inst.n < 1) throw ConfigError("instance: n must be positive");
  for (const auto& c : inst.constraints) {
    if (c.vars.size() != static_cast<std::size_t>(model.k())) throw ConfigError("instance: constraint arity mismatch");
    for (int v : c.vars)
      if (v < 0 || v >= inst.n) throw ConfigError("instance: variable out of range");
    if (c.w >= model.function_count()) throw ConfigError("instance: weight index out of range");
  }
  for (const auto& p : inst.pins) {
    if (p.var < 0 || p.var >= inst.n || p.value < 0 || p.value >= model.q())
      throw ConfigError("instance: invalid pin");
  }
}

double evaluate_weight(const FactorGraphInstance& inst, const ConstraintModel& model,
                       std::span<const int> sigma) {
  if (sigma.size() != static_cast<std::size_t>(inst.n)) throw ConfigError("assignment length mismatch");
  for (const auto& p : inst.pins)
    if (sigma[static_cast<std::size_t>(p.var)] != p.value) return 0.0;
  std::vector<int> tuple(static_cast<std::size_t>(model.k()));
  double w = 1.0;
  for (const auto& c : inst.constraints) {
    for (std::size_t i = 0; i < tuple.size(); ++i) tuple[i] = sigma[static_cast<std::size_t>(c.vars[i])];
    w *= model.value(c.w, tuple);
    if (w == 0.0) return 0.0;
  }
  return w;
}

}  // namespace cspphase
