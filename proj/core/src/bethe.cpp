#include "cspphase/bethe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cspphase/errors.hpp"
#include "cspphase/parallel.hpp"

namespace cspphase {

namespace {

constexpr std::size_t kSampleChunk = 1 << 14;
constexpr std::size_t kMemberChunk = 1 << 10;

double lambda(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

double resolve_tol(double tol, int q) { return tol < 0.0 ? 1e-3 * q : tol; }

// Digits of every tuple index, shared by the message kernels.
struct Kernel {
  int q;
  int k;
  std::size_t cells;
  std::vector<int> digits;
  const ConstraintModel& model;
  std::vector<double> buf;

  explicit Kernel(const ConstraintModel& m)
      : q(m.q()), k(m.k()), cells(ipow(static_cast<std::size_t>(m.q()), m.k())), model(m) {
    digits.resize(cells * static_cast<std::size_t>(k));
    for (std::size_t idx = 0; idx < cells; ++idx)
      WeightTable::tuple_of(idx, q, std::span<int>(digits.data() + idx * static_cast<std::size_t>(k), static_cast<std::size_t>(k)));
  }

  std::span<const double> table(std::uint64_t f) {
    if (model.closure() == Closure::kExplicit) return model.base()[f].table.values();
    WeightTable t = model.materialize(f);
    buf.assign(t.values().begin(), t.values().end());
    return buf;
  }

  int digit(std::size_t idx, int j) const { return digits[idx * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)]; }

  // out[s] = sum_{tau: tau_p = s} psi(tau) prod_{j != p} rho[j][tau_j]
  void message(std::span<const double> psi, int p, const std::vector<const double*>& rho, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t idx = 0; idx < cells; ++idx) {
      double w = psi[idx];
      if (w == 0.0) continue;
      for (int j = 0; j < k && w != 0.0; ++j)
        if (j != p) w *= rho[static_cast<std::size_t>(j)][digit(idx, j)];
      out[static_cast<std::size_t>(digit(idx, p))] += w;
    }
  }

  double edge(std::span<const double> psi, const std::vector<const double*>& rho) const {
    double z = 0.0;
    for (std::size_t idx = 0; idx < cells; ++idx) {
      double w = psi[idx];
      for (int j = 0; j < k && w != 0.0; ++j) w *= rho[static_cast<std::size_t>(j)][digit(idx, j)];
      z += w;
    }
    return z;
  }
};

void shift_into(std::span<const double> in, int s, int q, std::span<double> out) {
  for (int w = 0; w < q; ++w) out[static_cast<std::size_t>(w)] = in[static_cast<std::size_t>(((w - s) % q + q) % q)];
}

void dirichlet(Rng& rng, std::span<double> out) {
  std::exponential_distribution<double> e(1.0);
  double s = 0.0;
  for (double& x : out) s += (x = e(rng.engine()));
  for (double& x : out) x /= s;
}

int draw_color(Rng& rng, std::span<const double> mu) {
  double u = rng.uniform();
  for (std::size_t c = 0; c + 1 < mu.size(); ++c) {
    if (u < mu[c]) return static_cast<int>(c);
    u -= mu[c];
  }
  return static_cast<int>(mu.size()) - 1;
}

struct TermSample {
  double first;     // q^-1 xi^-gamma Lambda(Z1)
  double control;   // ln q + gamma ln xi
  double second;    // Lambda(Z2)
};

TermSample draw_terms(double d, Kernel& kern, const Population& pi, Rng& rng, std::vector<std::vector<double>>& scratch,
                      std::vector<double>& prod, std::vector<double>& msg) {
  const int q = kern.q;
  const int k = kern.k;
  const double ln_xi = std::log(kern.model.xi());
  std::vector<const double*> rho(static_cast<std::size_t>(k));
  TermSample t{};
  const int gamma = rng.poisson(d);
  std::fill(prod.begin(), prod.end(), 1.0);
  double log_scale = 0.0;
  bool zero = false;
  for (int i = 0; i < gamma; ++i) {
    const auto psi = kern.table(kern.model.sample_function(rng));
    for (int j = 0; j < k - 1; ++j) {
      pi.sample(rng, scratch[static_cast<std::size_t>(j)]);
      rho[static_cast<std::size_t>(j)] = scratch[static_cast<std::size_t>(j)].data();
    }
    if (zero) continue;
    kern.message(psi, k - 1, rho, msg);
    double mx = 0.0;
    for (int s = 0; s < q; ++s) mx = std::max(mx, prod[static_cast<std::size_t>(s)] *= msg[static_cast<std::size_t>(s)]);
    if (mx == 0.0) {
      zero = true;
      continue;
    }
    for (double& x : prod) x /= mx;
    log_scale += std::log(mx);
  }
  t.control = std::log(static_cast<double>(q)) + gamma * ln_xi;
  if (!zero) {
    const double log_z = log_scale + std::log(std::accumulate(prod.begin(), prod.end(), 0.0));
    t.first = std::exp(log_z - t.control) * log_z;
  }
  const auto psi = kern.table(kern.model.sample_function(rng));
  for (int j = 0; j < k; ++j) {
    pi.sample(rng, scratch[static_cast<std::size_t>(j)]);
    rho[static_cast<std::size_t>(j)] = scratch[static_cast<std::size_t>(j)].data();
  }
  t.second = lambda(kern.edge(psi, rho));
  return t;
}

// Draws points of pi size-biased by rho(c): Pr ~ rho(c) dpi(rho).
class BiasedSampler {
 public:
  explicit BiasedSampler(const Population& pi) : pi_(pi), q_(pi.q()) {
    const std::size_t n = pi.size();
    const auto& w = pi.weights();
    if (pi.anchored()) {
      std::vector<double> cells(n * static_cast<std::size_t>(q_));
      for (std::size_t r = 0; r < n; ++r)
        for (int u = 0; u < q_; ++u) cells[r * static_cast<std::size_t>(q_) + static_cast<std::size_t>(u)] = pi.point(r)[static_cast<std::size_t>(u)];
      tables_.emplace_back(cells);
    } else {
      std::vector<double> cells(n);
      for (int c = 0; c < q_; ++c) {
        for (std::size_t r = 0; r < n; ++r) cells[r] = (w.empty() ? 1.0 : w[r]) * pi.point(r)[static_cast<std::size_t>(c)];
        tables_.emplace_back(cells);
      }
    }
  }

  void sample(Rng& rng, int c, std::span<double> out) const {
    if (pi_.anchored()) {
      const std::size_t cell = tables_[0].sample(rng);
      const std::size_t r = cell / static_cast<std::size_t>(q_);
      const int u = static_cast<int>(cell % static_cast<std::size_t>(q_));
      shift_into(pi_.point(r), c - u, q_, out);
    } else {
      const auto p = pi_.point(tables_[static_cast<std::size_t>(c)].sample(rng));
      std::copy(p.begin(), p.end(), out.begin());
    }
  }

 private:
  const Population& pi_;
  int q_;
  std::vector<AliasTable> tables_;
};

// (psi, tau) with probability proportional to P(psi) psi(tau), over tuples with
// tau[p] = colour (p >= 0) or over all tuples (p < 0).
std::uint64_t planted_constraint(const ConstraintModel& model, Rng& rng, int p, int colour, std::vector<int>& tau) {
  const int q = model.q();
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const std::uint64_t f = model.sample_function(rng);
    for (auto& t : tau) t = static_cast<int>(rng.below(static_cast<std::uint64_t>(q)));
    if (p >= 0) tau[static_cast<std::size_t>(p)] = colour;
    const double v = model.value(f, tau);
    if (v > 0.0 && rng.uniform() < v) return f;
  }
  throw NumericRefusal("planted constraint sampling failed");
}

// Size-biased form of (first - control, second / xi - ln xi): the Lambda
// weights become sampling weights, which removes most of the variance near
// the trivial point.
std::pair<double, double> draw_planted_terms(double d, Kernel& kern, const BiasedSampler& bs, Rng& rng,
                                             std::vector<std::vector<double>>& scratch, std::vector<double>& prod,
                                             std::vector<double>& msg, std::vector<int>& tau) {
  const int q = kern.q;
  const int k = kern.k;
  const double ln_xi = std::log(kern.model.xi());
  std::vector<const double*> rho(static_cast<std::size_t>(k));
  const int root = static_cast<int>(rng.below(static_cast<std::uint64_t>(q)));
  const int gamma = rng.poisson(d);
  std::fill(prod.begin(), prod.end(), 1.0);
  double log_scale = 0.0;
  for (int i = 0; i < gamma; ++i) {
    const std::uint64_t f = planted_constraint(kern.model, rng, k - 1, root, tau);
    const auto psi = kern.table(f);
    for (int j = 0; j < k - 1; ++j) {
      bs.sample(rng, tau[static_cast<std::size_t>(j)], scratch[static_cast<std::size_t>(j)]);
      rho[static_cast<std::size_t>(j)] = scratch[static_cast<std::size_t>(j)].data();
    }
    kern.message(psi, k - 1, rho, msg);
    double mx = 0.0;
    for (int s = 0; s < q; ++s) mx = std::max(mx, prod[static_cast<std::size_t>(s)] *= msg[static_cast<std::size_t>(s)] / kern.model.xi());
    for (double& x : prod) x /= mx;
    log_scale += std::log(mx);
  }
  const double first = log_scale + std::log(std::accumulate(prod.begin(), prod.end(), 0.0) / q);
  const std::uint64_t f = planted_constraint(kern.model, rng, -1, 0, tau);
  const auto psi = kern.table(f);
  for (int j = 0; j < k; ++j) {
    bs.sample(rng, tau[static_cast<std::size_t>(j)], scratch[static_cast<std::size_t>(j)]);
    rho[static_cast<std::size_t>(j)] = scratch[static_cast<std::size_t>(j)].data();
  }
  const double second = std::log(kern.edge(psi, rho)) - ln_xi;
  return {first, second};
}

template <class Combine>
BetheEstimate run_terms(double d, const ConstraintModel& model, const Population& pi, const BetheOptions& opts,
                        Combine&& combine) {
  if (d < 0.0) throw ConfigError("bethe: d must be nonnegative");
  if (pi.q() != model.q()) throw ConfigError("bethe: population has the wrong number of colours");
  if (pi.size() == 0) throw ConfigError("bethe: empty population");
  if (opts.samples == 0) throw ConfigError("bethe: samples must be positive");
  if (pi.mean_deviation() > resolve_tol(opts.tol_mean, model.q()))
    throw ConfigError("bethe: population violates the uniform-mean constraint");
  const ChunkPlan plan = plan_chunks(opts.samples, kSampleChunk);
  std::vector<RunningStat> parts(plan.chunks);
  parallel_for(plan.chunks, opts.threads, [&](std::size_t c) {
    Kernel kern(model);
    Rng rng(opts.seed, c);
    std::vector<std::vector<double>> scratch(static_cast<std::size_t>(model.k()), std::vector<double>(static_cast<std::size_t>(model.q())));
    std::vector<double> prod(static_cast<std::size_t>(model.q())), msg(static_cast<std::size_t>(model.q()));
    RunningStat st;
    for (std::size_t i = plan.begin(c); i < plan.end(c); ++i) st.add(combine(draw_terms(d, kern, pi, rng, scratch, prod, msg)));
    parts[c] = st;
  });
  RunningStat all;
  for (const auto& p : parts) all.merge(p);
  BetheEstimate e;
  e.value = all.mean();
  e.stderr = all.stderr_of_mean();
  e.samples = all.count();
  e.d = d;
  e.model = model.name();
  return e;
}

}  // namespace

// ---------------------------------------------------------------------------

Population::Population(int q, std::size_t n) : q_(q), size_(n), points_(n * static_cast<std::size_t>(q), 1.0 / q), colors_(n, 0) {
  if (q < 2) throw ConfigError("population: q must be at least 2");
  for (std::size_t i = 0; i < n; ++i) colors_[i] = static_cast<int>(i % static_cast<std::size_t>(q));
}

Population Population::point_mass_uniform(int q, std::size_t n) {
  Population p(q, n);
  p.anchored_ = true;
  std::fill(p.colors_.begin(), p.colors_.end(), 0);
  return p;
}

Population Population::from_points(int q, const std::vector<std::vector<double>>& points, std::vector<double> weights) {
  if (points.empty()) throw ConfigError("population: no points");
  if (!weights.empty() && weights.size() != points.size()) throw ConfigError("population: weight count mismatch");
  Population p(q, points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != static_cast<std::size_t>(q)) throw ConfigError("population: point has wrong length");
    double s = 0.0;
    for (double x : points[i]) {
      if (!(x >= 0.0)) throw ConfigError("population: negative entry");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ConfigError("population: point does not sum to 1");
    std::copy(points[i].begin(), points[i].end(), p.point(i).begin());
  }
  if (!weights.empty()) {
    double run = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw ConfigError("population: negative weight");
      p.cumulative_.push_back(run += w);
    }
    if (!(run > 0.0)) throw ConfigError("population: weights sum to 0");
    p.weights_ = std::move(weights);
  }
  return p;
}

Population Population::expanded() const {
  if (!anchored_) return *this;
  Population out(q_, size_ * static_cast<std::size_t>(q_));
  for (std::size_t i = 0; i < size_; ++i)
    for (int s = 0; s < q_; ++s) {
      const std::size_t j = i * static_cast<std::size_t>(q_) + static_cast<std::size_t>(s);
      shift_into(point(i), s, q_, out.point(j));
      out.colors_[j] = s;
    }
  return out;
}

std::vector<double> Population::mean() const {
  std::vector<double> m(static_cast<std::size_t>(q_), 0.0);
  if (anchored_) {
    // every shift class is averaged, so the mean is uniform up to rounding
    for (std::size_t i = 0; i < size_; ++i) {
      double s = 0.0;
      for (double x : point(i)) s += x;
      for (double& x : m) x += s / q_;
    }
    for (double& x : m) x /= static_cast<double>(size_);
    return m;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < size_; ++i) {
    const double w = weights_.empty() ? 1.0 : weights_[i];
    total += w;
    for (int c = 0; c < q_; ++c) m[static_cast<std::size_t>(c)] += w * point(i)[static_cast<std::size_t>(c)];
  }
  for (double& x : m) x /= total;
  return m;
}

double Population::mean_deviation() const {
  double dev = 0.0;
  for (double x : mean()) dev = std::max(dev, std::abs(x - 1.0 / q_));
  return dev;
}

void Population::sample(Rng& rng, std::span<double> out) const {
  std::size_t r;
  if (cumulative_.empty()) {
    r = rng.below(size_);
  } else {
    const double u = rng.uniform() * cumulative_.back();
    r = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
    r = std::min(r, size_ - 1);
  }
  if (anchored_) {
    shift_into(point(r), static_cast<int>(rng.below(static_cast<std::uint64_t>(q_))), q_, out);
  } else {
    std::copy(point(r).begin(), point(r).end(), out.begin());
  }
}

void Population::permute_colors(std::span<const int> perm) {
  if (perm.size() != static_cast<std::size_t>(q_)) throw ConfigError("population: permutation has wrong length");
  std::vector<double> tmp(static_cast<std::size_t>(q_));
  for (std::size_t i = 0; i < size_; ++i) {
    auto p = point(i);
    for (int c = 0; c < q_; ++c) tmp[static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])] = p[static_cast<std::size_t>(c)];
    std::copy(tmp.begin(), tmp.end(), p.begin());
    colors_[i] = perm[static_cast<std::size_t>(colors_[i])];
  }
}

// ---------------------------------------------------------------------------

double bethe_trivial(double d, const ConstraintModel& model) {
  return std::log(static_cast<double>(model.q())) + d / model.k() * std::log(model.xi());
}

BetheEstimate bethe_value(double d, const ConstraintModel& model, const Population& pi, const BetheOptions& opts) {
  const double c = d * (model.k() - 1) / (model.k() * model.xi());
  return run_terms(d, model, pi, opts, [c](const TermSample& t) { return t.first - c * t.second; });
}

BetheEstimate bethe_gap(double d, const ConstraintModel& model, const Population& pi, const BetheOptions& opts) {
  if (d < 0.0) throw ConfigError("bethe: d must be nonnegative");
  if (pi.q() != model.q()) throw ConfigError("bethe: population has the wrong number of colours");
  if (pi.size() == 0) throw ConfigError("bethe: empty population");
  if (opts.samples == 0) throw ConfigError("bethe: samples must be positive");
  if (pi.mean_deviation() > resolve_tol(opts.tol_mean, model.q()))
    throw ConfigError("bethe: population violates the uniform-mean constraint");
  const int k = model.k();
  const double c = d * (k - 1) / k;
  const BiasedSampler bs(pi);
  const ChunkPlan plan = plan_chunks(opts.samples, kSampleChunk);
  std::vector<RunningStat> parts(plan.chunks);
  parallel_for(plan.chunks, opts.threads, [&](std::size_t ch) {
    Kernel kern(model);
    Rng rng(opts.seed, ch);
    std::vector<std::vector<double>> scratch(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(model.q())));
    std::vector<double> prod(static_cast<std::size_t>(model.q())), msg(static_cast<std::size_t>(model.q()));
    std::vector<int> tau(static_cast<std::size_t>(k));
    RunningStat st;
    for (std::size_t i = plan.begin(ch); i < plan.end(ch); ++i) {
      const auto [a, b] = draw_planted_terms(d, kern, bs, rng, scratch, prod, msg, tau);
      st.add(a - c * b);
    }
    parts[ch] = st;
  });
  RunningStat all;
  for (const auto& p : parts) all.merge(p);
  return {all.mean(), all.stderr_of_mean(), all.count(), d, model.name()};
}

BetheEstimate naesat_bethe(double d, int k, std::span<const double> pi, const BetheOptions& opts,
                           std::span<const double> weights) {
  if (k < 3) throw ConfigError("naesat_bethe: k must be at least 3");
  if (d < 0.0) throw ConfigError("naesat_bethe: d must be nonnegative");
  if (pi.empty()) throw ConfigError("naesat_bethe: empty measure");
  if (!weights.empty() && weights.size() != pi.size()) throw ConfigError("naesat_bethe: weight count mismatch");
  std::vector<double> cumulative;
  double mean = 0.0, total = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (!(pi[i] >= 0.0 && pi[i] <= 1.0)) throw ConfigError("naesat_bethe: support outside [0, 1]");
    const double w = weights.empty() ? 1.0 : weights[i];
    total += w;
    mean += w * pi[i];
    cumulative.push_back(total);
  }
  if (std::abs(mean / total - 0.5) > resolve_tol(opts.tol_mean, 2))
    throw ConfigError("naesat_bethe: measure violates the mean-1/2 constraint");
  const double xi = 1.0 - std::ldexp(1.0, 1 - k);
  const double c = d * (k - 1) / (k * xi);
  const ChunkPlan plan = plan_chunks(opts.samples, kSampleChunk);
  std::vector<RunningStat> parts(plan.chunks);
  parallel_for(plan.chunks, opts.threads, [&](std::size_t ch) {
    Rng rng(opts.seed, ch);
    auto draw = [&] {
      const double u = rng.uniform() * total;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      return pi[std::min(static_cast<std::size_t>(it - cumulative.begin()), pi.size() - 1)];
    };
    RunningStat st;
    for (std::size_t s = plan.begin(ch); s < plan.end(ch); ++s) {
      const int gamma = rng.poisson(d);
      double log_a = 0.0, log_b = 0.0;
      bool a0 = false, b0 = false;
      for (int i = 0; i < gamma; ++i) {
        double pa = 1.0, pb = 1.0;
        for (int j = 0; j < k - 1; ++j) {
          const double r = draw();
          pa *= r;
          pb *= 1.0 - r;
        }
        if (1.0 - pa <= 0.0) a0 = true; else log_a += std::log1p(-pa);
        if (1.0 - pb <= 0.0) b0 = true; else log_b += std::log1p(-pb);
      }
      const double log_norm = std::log(2.0) + gamma * std::log(xi);
      double first = 0.0;
      if (!(a0 && b0)) {
        const double hi = a0 ? log_b : b0 ? log_a : std::max(log_a, log_b);
        const double sum = (a0 ? 0.0 : std::exp(log_a - hi)) + (b0 ? 0.0 : std::exp(log_b - hi));
        const double log_z = hi + std::log(sum);
        first = std::exp(log_z - log_norm) * log_z;
      }
      double pa = 1.0, pb = 1.0;
      for (int j = 0; j < k; ++j) {
        const double r = draw();
        pa *= r;
        pb *= 1.0 - r;
      }
      st.add(first - c * lambda(1.0 - pa - pb));
    }
    parts[ch] = st;
  });
  RunningStat all;
  for (const auto& p : parts) all.merge(p);
  return {all.mean(), all.stderr_of_mean(), all.count(), d, "naesat"};
}

// ---------------------------------------------------------------------------

std::string to_string(InitKind kind) {
  switch (kind) {
    case InitKind::kUniform: return "uniform";
    case InitKind::kPlantedBias: return "planted-bias";
    case InitKind::kRandom: return "random";
  }
  return "?";
}

InitKind init_from_string(const std::string& s) {
  if (s == "uniform") return InitKind::kUniform;
  if (s == "planted-bias" || s == "planted") return InitKind::kPlantedBias;
  if (s == "random") return InitKind::kRandom;
  throw ConfigError("unknown population init '" + s + "'");
}

Population population_dynamics(double d, const ConstraintModel& model, const PopulationOptions& opts) {
  if (d < 0.0) throw ConfigError("population dynamics: d must be nonnegative");
  if (opts.size < 1000) throw ConfigError("population dynamics: N must be at least 1000");
  if (opts.sweeps < 0) throw ConfigError("population dynamics: sweeps must be nonnegative");
  if (opts.epsilon < 0.0 || opts.epsilon > 1.0) throw ConfigError("population dynamics: epsilon must lie in [0, 1]");
  const int q = model.q();
  const int k = model.k();
  const std::size_t n = opts.size;
  const bool anchored = model.color_symmetric();
  const double tol = resolve_tol(opts.tol_mean, q);

  Population pop(q, n);
  pop.set_anchored(anchored);
  {
    Rng rng(opts.seed, 0xfffffff0ULL);
    for (std::size_t i = 0; i < n; ++i) {
      auto p = pop.point(i);
      const int c = anchored ? 0 : pop.colors()[i];
      if (anchored) pop.colors()[i] = 0;
      switch (opts.init) {
        case InitKind::kUniform: break;
        case InitKind::kPlantedBias:
          for (int s = 0; s < q; ++s) p[static_cast<std::size_t>(s)] = (1.0 - opts.epsilon) / q + (s == c ? opts.epsilon : 0.0);
          break;
        case InitKind::kRandom: {
          std::vector<double> mu(static_cast<std::size_t>(q));
          dirichlet(rng, mu);
          if (anchored) {
            const int colour = draw_color(rng, mu);
            shift_into(mu, -colour, q, p);
          } else {
            std::copy(mu.begin(), mu.end(), p.begin());
          }
          break;
        }
      }
    }
  }
  std::vector<std::vector<std::size_t>> by_color(static_cast<std::size_t>(q));
  if (!anchored)
    for (std::size_t i = 0; i < n; ++i) by_color[static_cast<std::size_t>(pop.colors()[i])].push_back(i);

  const ChunkPlan plan = plan_chunks(n, kMemberChunk);
  std::vector<double> next(n * static_cast<std::size_t>(q));
  std::vector<std::uint64_t> zeros(plan.chunks);
  for (int sweep = 0; sweep < opts.sweeps; ++sweep) {
    parallel_for(plan.chunks, opts.threads, [&](std::size_t ch) {
      Kernel kern(model);
      Rng rng(opts.seed, (static_cast<std::uint64_t>(sweep) << 24) | ch);
      std::vector<int> tau(static_cast<std::size_t>(k));
      std::vector<std::vector<double>> scratch(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(q)));
      std::vector<const double*> rho(static_cast<std::size_t>(k));
      std::vector<double> msg(static_cast<std::size_t>(q)), prod(static_cast<std::size_t>(q));
      std::uint64_t z = 0;
      for (std::size_t i = plan.begin(ch); i < plan.end(ch); ++i) {
        const int colour = pop.colors()[i];
        for (;;) {
          const int gamma = rng.poisson(d);
          std::fill(prod.begin(), prod.end(), 1.0);
          bool dead = false;
          for (int e = 0; e < gamma && !dead; ++e) {
            const std::uint64_t f = planted_constraint(model, rng, k - 1, colour, tau);
            const auto psi = kern.table(f);
            for (int j = 0; j < k - 1; ++j) {
              const int cj = tau[static_cast<std::size_t>(j)];
              auto& buf = scratch[static_cast<std::size_t>(j)];
              if (anchored) {
                shift_into(pop.point(rng.below(n)), cj, q, buf);
              } else {
                const auto& list = by_color[static_cast<std::size_t>(cj)];
                const auto src = pop.point(list[rng.below(list.size())]);
                std::copy(src.begin(), src.end(), buf.begin());
              }
              rho[static_cast<std::size_t>(j)] = buf.data();
            }
            kern.message(psi, k - 1, rho, msg);
            double mx = 0.0;
            for (int s = 0; s < q; ++s) mx = std::max(mx, prod[static_cast<std::size_t>(s)] *= msg[static_cast<std::size_t>(s)]);
            if (mx == 0.0) dead = true;
            else for (double& x : prod) x /= mx;
          }
          if (dead) {
            ++z;
            if (z > 4 * (plan.end(ch) - plan.begin(ch))) {
              std::copy_n(pop.point(i).begin(), q, next.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(q)));
              break;
            }
            continue;
          }
          const double s = std::accumulate(prod.begin(), prod.end(), 0.0);
          for (int c = 0; c < q; ++c) next[i * static_cast<std::size_t>(q) + static_cast<std::size_t>(c)] = prod[static_cast<std::size_t>(c)] / s;
          break;
        }
      }
      zeros[ch] = z;
    });
    const std::uint64_t zero_total = std::accumulate(zeros.begin(), zeros.end(), std::uint64_t{0});
    pop.zero_redraws += zero_total;
    if (static_cast<double>(zero_total) > 0.1 * static_cast<double>(n))
      throw NumericRefusal("model too constrained at this d/N");
    if (anchored) {
      for (std::size_t i = 0; i < n; ++i) std::copy_n(next.data() + i * static_cast<std::size_t>(q), q, pop.point(i).begin());
    } else {
      Population trial = pop;
      for (std::size_t i = 0; i < n; ++i) std::copy_n(next.data() + i * static_cast<std::size_t>(q), q, trial.point(i).begin());
      if (trial.mean_deviation() <= tol) pop = std::move(trial);  // drifting sweeps are rejected
    }
  }
  return pop;
}

// ---------------------------------------------------------------------------

GapPoint gap_at(double d, const ConstraintModel& model, const DcondOptions& opts) {
  const std::uint64_t pilot = std::max<std::uint64_t>(opts.samples / 10, 10000);
  GapPoint best{d, 0.0, 0.0, "uniform", false};
  double best_pilot = -std::numeric_limits<double>::infinity();
  Population best_pop;
  bool have = false;
  std::uint64_t salt = 0;
  for (InitKind init : opts.inits) {
    for (int s = 0; s < opts.seeds; ++s, ++salt) {
      if (init == InitKind::kUniform) {
        // uniform is an exact fixed point for balanced symmetric models
        if (best_pilot < 0.0) {
          best_pilot = 0.0;
          best.best_init = "uniform";
          have = false;
        }
        break;
      }
      PopulationOptions po = opts.population;
      po.init = init;
      po.seed = opts.population.seed * 1000003ULL + salt;
      Population pop = population_dynamics(d, model, po);
      BetheOptions bo{pilot, po.seed ^ 0x9e3779b9ULL, opts.population.threads, opts.population.tol_mean};
      const BetheEstimate e = bethe_gap(d, model, pop, bo);
      if (e.value > best_pilot) {
        best_pilot = e.value;
        best_pop = std::move(pop);
        best.best_init = to_string(init);
        have = true;
      }
    }
  }
  if (have) {
    BetheOptions bo{opts.samples, opts.population.seed * 7919ULL + 17, opts.population.threads, opts.population.tol_mean};
    const BetheEstimate e = bethe_gap(d, model, best_pop, bo);
    best.gap = e.value;
    best.stderr = e.stderr;
    best.positive = e.value > opts.z * e.stderr;
  }
  return best;
}

DcondResult dcond_estimate(const ConstraintModel& model, double d_lo, double d_hi, const DcondOptions& opts) {
  if (!(d_lo < d_hi) || d_lo < 0.0) throw ConfigError("dcond: need 0 <= d_lo < d_hi");
  if (!(opts.tol_d > 0.0)) throw ConfigError("dcond: tol_d must be positive");
  DcondResult r;
  const GapPoint lo = gap_at(d_lo, model, opts);
  const GapPoint hi = gap_at(d_hi, model, opts);
  r.curve = {lo, hi};
  if (lo.positive == hi.positive) throw ConfigError("bracket does not straddle threshold");
  double a = d_lo, b = d_hi;
  while (b - a > opts.tol_d) {
    const double mid = 0.5 * (a + b);
    const GapPoint g = gap_at(mid, model, opts);
    r.curve.push_back(g);
    (g.positive ? b : a) = mid;
  }
  std::sort(r.curve.begin(), r.curve.end(), [](const GapPoint& x, const GapPoint& y) { return x.d < y.d; });
  r.lower = a;
  r.upper = b;
  return r;
}

}  // namespace cspphase
