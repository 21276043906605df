#include "cspphase/reconstruction.hpp"

#include <algorithm>
#include <cmath>

#include "cspphase/errors.hpp"
#include "cspphase/parallel.hpp"
#include "cspphase/stats.hpp"

namespace cspphase {

std::vector<double> root_posterior(const GWTree& tree, const ConstraintModel& model, std::span<const int> values) {
  const int q = model.q();
  const int k = model.k();
  if (tree.q != q || tree.k != k) throw ConfigError("root posterior: tree and model disagree");
  if (values.size() != tree.variables()) throw ConfigError("root posterior: boundary must cover the tree");
  const std::size_t nv = tree.variables();
  std::vector<double> msg(nv * static_cast<std::size_t>(q), 1.0);
  for (std::size_t v = 0; v < nv; ++v) {
    if (tree.var_depth[v] != tree.generations) continue;
    const int x = values[v];
    if (x < 0 || x >= q) throw ConfigError("root posterior: boundary value out of range");
    for (int c = 0; c < q; ++c) msg[v * static_cast<std::size_t>(q) + static_cast<std::size_t>(c)] = c == x ? 1.0 : 0.0;
  }
  const std::size_t cells = ipow(static_cast<std::size_t>(q), k);
  std::vector<int> tuple(static_cast<std::size_t>(k));
  std::vector<double> out(static_cast<std::size_t>(q));
  for (std::size_t a = tree.constraints(); a-- > 0;) {
    const int p = tree.con_position[a];
    const int first = tree.con_first_child[a];
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t idx = 0; idx < cells; ++idx) {
      WeightTable::tuple_of(idx, q, tuple);
      double w = model.value(tree.con_function[a], tuple);
      for (int i = 0, j = 0; i < k && w != 0.0; ++i) {
        if (i == p) continue;
        w *= msg[static_cast<std::size_t>(first + j++) * static_cast<std::size_t>(q) + static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])];
      }
      out[static_cast<std::size_t>(tuple[static_cast<std::size_t>(p)])] += w;
    }
    double s = 0.0;
    for (double x : out) s += x;
    if (!(s > 0.0)) throw NumericRefusal("infeasible boundary");
    const auto parent = static_cast<std::size_t>(tree.con_parent[a]);
    double mx = 0.0;
    for (int c = 0; c < q; ++c) mx = std::max(mx, msg[parent * static_cast<std::size_t>(q) + static_cast<std::size_t>(c)] *= out[static_cast<std::size_t>(c)] / s);
    if (!(mx > 0.0)) throw NumericRefusal("infeasible boundary");
    for (int c = 0; c < q; ++c) msg[parent * static_cast<std::size_t>(q) + static_cast<std::size_t>(c)] /= mx;
  }
  std::vector<double> root(msg.begin(), msg.begin() + q);
  double s = 0.0;
  for (double x : root) s += x;
  if (!(s > 0.0)) throw NumericRefusal("infeasible boundary");
  for (double& x : root) x /= s;
  return root;
}

CorrEstimate corr_star(double d, const ConstraintModel& model, int ell, const CorrOptions& opts) {
  if (ell < 1) throw ConfigError("corr: ell must be at least 1");
  if (d < 0.0) throw ConfigError("corr: d must be nonnegative");
  if (opts.trials < 2) throw ConfigError("corr: need at least 2 trials");
  const int q = model.q();
  const ChunkPlan plan = plan_chunks(static_cast<std::size_t>(opts.trials), 16);
  std::vector<RunningStat> parts(plan.chunks), sizes(plan.chunks);
  parallel_for(plan.chunks, opts.threads, [&](std::size_t c) {
    for (std::size_t t = plan.begin(c); t < plan.end(c); ++t) {
      Rng rng(opts.seed, t);
      GWTree tree = sample_gw_tree(d, model, ell, rng);
      broadcast(tree, model, rng);
      const auto post = root_posterior(tree, model, tree.values);
      double s = 0.0;
      for (double x : post) s += std::abs(x - 1.0 / q);
      parts[c].add(s);
      sizes[c].add(static_cast<double>(tree.variables()));
    }
  });
  RunningStat all, size;
  for (std::size_t c = 0; c < plan.chunks; ++c) {
    all.merge(parts[c]);
    size.merge(sizes[c]);
  }
  return {d, ell, all.mean(), all.stderr_of_mean(), opts.trials, size.mean()};
}

DrecResult drec_estimate(const ConstraintModel& model, double d_lo, double d_hi, int ell, double tol_d,
                         const CorrOptions& opts, std::optional<double> dcond_upper) {
  if (!(d_lo < d_hi) || d_lo < 0.0) throw ConfigError("drec: need 0 <= d_lo < d_hi");
  if (!(tol_d > 0.0)) throw ConfigError("drec: tol_d must be positive");
  DrecResult r;
  const CorrEstimate lo = corr_star(d_lo, model, ell, opts);
  const CorrEstimate hi = corr_star(d_hi, model, ell, opts);
  r.curve = {lo, hi};
  if (!lo.positive() && !hi.positive()) throw ConfigError("no threshold in bracket");
  if (lo.positive() == hi.positive() || lo.positive()) throw ConfigError("bracket does not straddle threshold");
  double a = d_lo, b = d_hi;
  while (b - a > tol_d) {
    const double mid = 0.5 * (a + b);
    const CorrEstimate e = corr_star(mid, model, ell, opts);
    r.curve.push_back(e);
    (e.positive() ? b : a) = mid;
  }
  std::sort(r.curve.begin(), r.curve.end(), [](const CorrEstimate& x, const CorrEstimate& y) { return x.d < y.d; });
  r.lower = a;
  r.upper = b;
  if (dcond_upper) r.capped_upper = std::min(b, *dcond_upper);
  return r;
}

}  // namespace cspphase
