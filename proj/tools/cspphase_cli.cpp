// cspphase command line tool.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cspphase/assumptions.hpp"
#include "cspphase/bethe.hpp"
#include "cspphase/cycles.hpp"
#include "cspphase/errors.hpp"
#include "cspphase/graphs.hpp"
#include "cspphase/model.hpp"
#include "cspphase/oracle.hpp"
#include "cspphase/parallel.hpp"
#include "cspphase/reconstruction.hpp"
#include "cspphase/spectral.hpp"

using nlohmann::json;
using namespace cspphase;

namespace {

constexpr const char* kVersion = "0.3.0";

struct RunConfig {
  std::string command;
  std::string task;
  std::string model = "naesat";
  int k = 0;
  int q = 3;
  double beta = -1.0;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out;
  std::string format = "json";

  double d = 1.0;
  int n = 0;
  int m = -1;
  std::size_t population = 100000;
  int sweeps = 200;
  std::uint64_t samples = 1000000;
  int trials = 0;
  int ell = 0;
  std::string pi = "uniform";
  std::string init = "planted-bias";
  double epsilon = 0.3;
  double dlo = 0.5;
  double dhi = 6.0;
  double told = 0.05;
  int seeds = 5;
  std::string instance;
  std::string kind = "null";
  std::string signature;
  int order = 0;
  int theta = 10;
  bool gap = false;
  bool simple = false;
  double dcond_upper = -1.0;

  json to_json() const {
    return {{"command", command}, {"task", task}, {"model", model}, {"k", k}, {"q", q}, {"beta", beta},
            {"seed", seed}, {"threads", threads}, {"format", format}, {"d", d}, {"n", n}, {"m", m},
            {"population", population}, {"sweeps", sweeps}, {"samples", samples}, {"trials", trials},
            {"ell", ell}, {"pi", pi}, {"init", init}, {"epsilon", epsilon}, {"dlo", dlo}, {"dhi", dhi},
            {"told", told}, {"seeds", seeds}, {"instance", instance}, {"kind", kind}, {"signature", signature},
            {"order", order}, {"theta", theta}, {"gap", gap}, {"simple", simple}, {"dcond_upper", dcond_upper}};
  }
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<json>> rows;
};

struct Output {
  json result = json::object();
  Table table;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ConstraintModel resolve_model(const RunConfig& c) {
  auto arity = [&](int dflt) { return c.k > 0 ? c.k : dflt; };
  ConstraintModel m = [&] {
    if (c.model == "naesat") return make_naesat(arity(3));
    if (c.model == "coloring") return make_hypergraph_coloring(arity(2), c.q);
    if (c.model == "balanced-sat") return make_balanced_sat(arity(3));
    if (c.model == "parity-majority") return make_parity_majority(arity(3));
    if (c.model == "ksat") return make_ksat(arity(3));
    if (std::filesystem::exists(c.model)) return model_from_json(read_file(c.model));
    throw ConfigError("unknown model '" + c.model + "'");
  }();
  if (c.beta >= 0.0) return soften(m, c.beta);
  return m;
}

json num(double x) {
  if (std::isfinite(x)) return x;
  return std::isnan(x) ? json("nan") : json(x > 0 ? "inf" : "-inf");
}

json estimate(double value, double se, std::uint64_t n) { return {{"value", num(value)}, {"stderr", num(se)}, {"samples", n}}; }

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string csv_cell(const json& v) {
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string o = "\"";
    for (char ch : s) o += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return o + "\"";
  }
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  return v.dump();
}

std::string render(const RunConfig& cfg, const ConstraintModel* model, const Output& out) {
  json header = {{"tool", "cspphase"}, {"version", kVersion}, {"config", cfg.to_json()}};
  if (model) {
    header["model_hash"] = hex(model->hash());
    header["model_name"] = model->name();
  }
  std::ostringstream os;
  if (cfg.format == "json") {
    json doc = header;
    doc["result"] = out.result;
    if (!out.table.header.empty()) {
      json rows = json::array();
      for (const auto& r : out.table.rows) {
        json row = json::object();
        for (std::size_t i = 0; i < r.size(); ++i) row[out.table.header[i]] = r[i];
        rows.push_back(row);
      }
      doc["rows"] = rows;
    }
    os << doc.dump(2) << '\n';
    return os.str();
  }
  os << "# " << header.dump() << '\n';
  if (out.table.header.empty()) {
    os << "key,value\n";
    const json flat = out.result.flatten();
    for (const auto& [key, v] : flat.items()) os << csv_cell(key) << ',' << csv_cell(v) << '\n';
    return os.str();
  }
  os << "# summary " << out.result.dump() << '\n';
  for (std::size_t i = 0; i < out.table.header.size(); ++i) os << (i ? "," : "") << out.table.header[i];
  os << '\n';
  for (const auto& r : out.table.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_cell(r[i]);
    os << '\n';
  }
  return os.str();
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write '" + tmp.string() + "'");
    f << text;
    if (!f.flush()) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, target);
}

int default_trials(const RunConfig& c, int dflt) { return c.trials > 0 ? c.trials : dflt; }

FactorGraphInstance load_or_sample_instance(const RunConfig& c, const ConstraintModel& model, Rng& rng) {
  if (!c.instance.empty()) {
    FactorGraphInstance inst = instance_from_json(read_file(c.instance));
    validate_instance(inst, model);
    return inst;
  }
  if (c.n <= 0) throw ConfigError("need --instance or --n");
  const int m = c.m >= 0 ? c.m : sample_m(c.n, c.d, model.k(), rng);
  return sample_null(c.n, m, model, c.simple, rng);
}

Population load_population(const RunConfig& c, const ConstraintModel& model) {
  if (c.pi == "uniform") return Population::point_mass_uniform(model.q());
  if (c.pi == "pd") {
    PopulationOptions po;
    po.size = c.population;
    po.sweeps = c.sweeps;
    po.init = init_from_string(c.init);
    po.epsilon = c.epsilon;
    po.seed = c.seed;
    po.threads = c.threads;
    return population_dynamics(c.d, model, po);
  }
  const json j = json::parse(read_file(c.pi), nullptr, false);
  if (j.is_discarded() || !j.contains("points")) throw ConfigError("population file must be JSON with \"points\"");
  std::vector<std::vector<double>> pts = j.at("points").get<std::vector<std::vector<double>>>();
  std::vector<double> w;
  if (j.contains("weights")) w = j.at("weights").get<std::vector<double>>();
  return Population::from_points(model.q(), pts, w);
}

CycleSignature parse_signature(const std::string& text) {
  CycleSignature y;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    unsigned long long w;
    int s, t;
    if (std::sscanf(tok.c_str(), " %llu:%d>%d", &w, &s, &t) != 3) throw ConfigError("bad signature step '" + tok + "' (want w:s>t)");
    y.steps.push_back({w, s - 1, t - 1});
  }
  if (y.steps.empty()) throw ConfigError("empty signature");
  return y;
}

std::vector<CycleSignature> signatures_for(const RunConfig& c, const ConstraintModel& model) {
  if (!c.signature.empty()) {
    std::vector<CycleSignature> ys;
    std::istringstream is(c.signature);
    std::string part;
    while (std::getline(is, part, ';')) ys.push_back(parse_signature(part));
    return ys;
  }
  if (c.order > 0) return enumerate_signatures(model, c.order);
  throw ConfigError("need --signature or --order");
}

json spectral_json(const SpectralReport& r) {
  return {{"eig_phi", r.eig_phi}, {"eig_xi_E", r.eig_xi_E}, {"eig_xi_Eprime", r.eig_xi_Eprime},
          {"lambda_max_E", r.lambda_max_E}, {"d_ks", num(r.d_ks)}, {"phi", r.phi.data}};
}

// ---------------------------------------------------------------------------

Output cmd_model(const RunConfig& c, const ConstraintModel& m) {
  Output o;
  if (c.task == "validate") {
    o.result = {{"valid", true}, {"q", m.q()}, {"k", m.k()}};
    return o;
  }
  o.result = json::parse(model_to_json(m));
  o.result["function_count"] = m.function_count();
  o.result["xi"] = m.xi();
  o.result["color_symmetric"] = m.color_symmetric();
  o.result["hash"] = hex(m.hash());
  return o;
}

Output cmd_check(const RunConfig& c, const ConstraintModel& m) {
  AssumptionOptions ao;
  ao.pos.threads = c.threads;
  if (c.trials > 0) ao.pos.trials = c.trials;
  const AssumptionReport rep = check_all(m, ao, c.seed);
  Output o;
  o.table.header = {"condition", "status", "worst_residual"};
  json res = json::object();
  for (const auto& r : rep.results) {
    o.table.rows.push_back({r.condition, to_string(r.status), num(r.worst_residual)});
    json w = json::array();
    for (const auto& x : r.witnesses) w.push_back({{"kind", x.kind}, {"description", x.description}, {"values", x.values}});
    json diag = json::object();
    for (const auto& [key, v] : r.diagnostics) diag[key] = num(v);
    res[r.condition] = {{"status", to_string(r.status)}, {"worst_residual", num(r.worst_residual)}, {"witnesses", w}, {"diagnostics", diag}};
  }
  o.result = res;
  return o;
}

Output cmd_ks(const RunConfig&, const ConstraintModel& m) {
  Output o;
  o.result = spectral_json(spectral_report(m));
  return o;
}

Output cmd_bethe(const RunConfig& c, const ConstraintModel& m) {
  const Population pi = load_population(c, m);
  BetheOptions bo{c.samples, c.seed, c.threads, -1.0};
  Output o;
  const BetheEstimate v = bethe_value(c.d, m, pi, bo);
  o.result["bethe"] = estimate(v.value, v.stderr, v.samples);
  o.result["trivial"] = bethe_trivial(c.d, m);
  o.result["d"] = c.d;
  o.result["population_size"] = pi.size();
  o.result["zero_redraws"] = pi.zero_redraws;
  if (c.gap) {
    const BetheEstimate g = bethe_gap(c.d, m, pi, bo);
    o.result["gap"] = estimate(g.value, g.stderr, g.samples);
  }
  return o;
}

DcondOptions dcond_options(const RunConfig& c) {
  DcondOptions opts;
  opts.population.size = c.population;
  opts.population.sweeps = c.sweeps;
  opts.population.epsilon = c.epsilon;
  opts.population.seed = c.seed;
  opts.population.threads = c.threads;
  opts.samples = c.samples;
  opts.seeds = c.seeds;
  opts.tol_d = c.told;
  return opts;
}

Output cmd_dcond(const RunConfig& c, const ConstraintModel& m) {
  const DcondResult r = dcond_estimate(m, c.dlo, c.dhi, dcond_options(c));
  Output o;
  o.result = {{"lower", r.lower}, {"upper", r.upper}, {"d_ks", num(ks_threshold(m))},
              {"semantics", "lower: best population found no gap; upper: certified gap > 3 stderr from the best of the tried initialisations"}};
  o.table.header = {"d", "gap", "stderr", "best_init", "positive"};
  for (const auto& g : r.curve) o.table.rows.push_back({g.d, num(g.gap), num(g.stderr), g.best_init, g.positive});
  return o;
}

Output cmd_sample(const RunConfig& c, const ConstraintModel& m) {
  Rng rng(c.seed);
  if (c.n <= 0) throw ConfigError("sample: need --n");
  Output o;
  if (c.kind == "sigma-hat") {
    if (c.m < 0) throw ConfigError("sample sigma-hat: need --m");
    const auto s = sample_sigma_hat(c.n, c.m, m, rng);
    o.result = {{"sigma", s}};
    o.table.header = {"var", "value"};
    for (std::size_t i = 0; i < s.size(); ++i) o.table.rows.push_back({i, s[i]});
    return o;
  }
  const int mm = c.m >= 0 ? c.m : sample_m(c.n, c.d, m.k(), rng);
  FactorGraphInstance inst;
  std::vector<int> sigma;
  if (c.kind == "null") {
    inst = sample_null(c.n, mm, m, c.simple, rng);
  } else if (c.kind == "planted") {
    sigma = balanced_assignment(c.n, m.q(), rng);
    inst = sample_planted(c.n, mm, m, sigma, rng);
  } else if (c.kind == "pinned") {
    const FactorGraphInstance base = sample_null(c.n, mm, m, c.simple, rng);
    const BoltzmannTable table = boltzmann_table(base, m);
    const PinResult p = pin(base, c.theta, [&](Rng& r) { return sample_boltzmann(table, r); }, rng);
    inst = p.instance;
    o.result["theta"] = p.theta;
    o.result["pinned"] = p.pinned;
  } else {
    throw ConfigError("sample: unknown --kind '" + c.kind + "'");
  }
  o.result["instance"] = json::parse(instance_to_json(inst));
  if (!sigma.empty()) o.result["sigma"] = sigma;
  o.table.header = {"constraint", "w", "vars"};
  for (std::size_t a = 0; a < inst.constraints.size(); ++a) {
    std::string vars;
    for (std::size_t i = 0; i < inst.constraints[a].vars.size(); ++i) vars += (i ? " " : "") + std::to_string(inst.constraints[a].vars[i]);
    o.table.rows.push_back({a, inst.constraints[a].w, vars});
  }
  return o;
}

Output cmd_oracle(const RunConfig& c, const ConstraintModel& m) {
  Output o;
  EnumerationOptions eo;
  eo.threads = c.threads;
  const std::string task = c.task.empty() ? "z" : c.task;
  if (task == "moments") {
    if (c.n <= 0 || c.m < 0) throw ConfigError("oracle moments: need --n and --m");
    const AsymptoticMoments a = moment_asymptotic(c.n, c.m, m);
    o.result = {{"log_first_exact", log_first_moment_exact(c.n, c.m, m)},
                {"log_first_asymptotic", a.log_first},
                {"log_first_asymptotic_sqrt_q", a.log_first_sqrt_q},
                {"log_second_asymptotic", a.log_second},
                {"first_product", a.first_product},
                {"second_product", a.second_product},
                {"d", a.d}};
    try {
      o.result["log_second_exact"] = log_second_moment_exact(c.n, c.m, m);
    } catch (const SizeGuardError&) {
      o.result["log_second_exact"] = "size-guard";
    }
    return o;
  }
  if (task == "nishimori") {
    if (c.n <= 0 || c.m < 0) throw ConfigError("oracle nishimori: need --n and --m");
    const NishimoriReport r = nishimori_check(c.n, c.m, m, default_trials(c, 1000), c.seed);
    o.result = {{"max_rel_error", r.max_rel_error}, {"trials", r.trials.size()}};
    o.table.header = {"trial", "log_lhs", "log_rhs", "rel_error"};
    for (std::size_t i = 0; i < r.trials.size(); ++i)
      o.table.rows.push_back({i, r.trials[i].log_lhs, r.trials[i].log_rhs, r.trials[i].rel_error});
    return o;
  }
  Rng rng(c.seed);
  const FactorGraphInstance inst = load_or_sample_instance(c, m, rng);
  o.result["n"] = inst.n;
  o.result["m"] = inst.m();
  if (task == "z") {
    const long double z = partition_function(inst, m, eo);
    o.result["z"] = static_cast<double>(z);
    o.result["log_z"] = z > 0 ? num(static_cast<double>(std::log(z))) : json("-inf");
  } else if (task == "marginals") {
    const BoltzmannTable t = boltzmann_table(inst, m, eo);
    o.result["z"] = static_cast<double>(t.z);
    o.table.header = {"var", "value", "marginal"};
    for (int i = 0; i < t.n; ++i)
      for (int a = 0; a < t.q; ++a) o.table.rows.push_back({i, a, t.marginals[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)]});
  } else if (task == "epsilon") {
    o.result["epsilon_symmetry"] = epsilon_symmetry(inst, m, eo);
  } else if (task == "overlap") {
    const BoltzmannTable t = boltzmann_table(inst, m, eo);
    const OverlapResult r = overlap_statistic(t, c.seed);
    o.result["overlap"] = {{"value", r.value}, {"stderr", r.stderr}, {"exact", r.exact}};
  } else {
    throw ConfigError("oracle: unknown --task '" + task + "'");
  }
  return o;
}

Output cmd_cycles(const RunConfig& c, const ConstraintModel& m) {
  Output o;
  const std::string task = c.task.empty() ? "constants" : c.task;
  if (task == "constants") {
    o.table.header = {"signature", "kappa", "kappa_hat", "trace", "delta"};
    for (const auto& y : signatures_for(c, m)) {
      const CycleConstants k = signature_constants(y, c.d, m);
      o.table.rows.push_back({y.to_string(), k.kappa, k.kappa_hat, k.trace, k.delta});
    }
  } else if (task == "count") {
    Rng rng(c.seed);
    const FactorGraphInstance inst = load_or_sample_instance(c, m, rng);
    const auto ys = signatures_for(c, m);
    const auto counts = count_cycles(inst, ys);
    o.table.header = {"signature", "count"};
    for (std::size_t i = 0; i < ys.size(); ++i) o.table.rows.push_back({ys[i].to_string(), counts[i]});
  } else if (task == "poisson-test") {
    if (c.n <= 0) throw ConfigError("cycles poisson-test: need --n");
    PoissonTestOptions po;
    po.trials = default_trials(c, 2000);
    po.planted = c.kind == "planted";
    po.simple = c.simple;
    po.seed = c.seed;
    po.threads = c.threads;
    const PoissonReport r = poisson_test(m, c.d, c.n, signatures_for(c, m), po);
    o.table.header = {"signature", "expected", "mean", "stderr", "z", "chi2", "max_count"};
    for (const auto& s : r.stats)
      o.table.rows.push_back({s.signature.to_string(), s.expected, s.mean, s.stderr, num(s.z), s.chi2, s.max_count});
    o.result = {{"trials", r.trials}, {"planted", r.planted}, {"covariance", r.covariance}, {"covariance_stderr", r.covariance_stderr}};
  } else if (task == "limitlaw") {
    LimitLawOptions lo;
    lo.trials = default_trials(c, 10000);
    if (c.ell > 0) lo.ell_max = c.ell;
    lo.seed = c.seed;
    lo.threads = c.threads;
    const LimitLawReport r = simulate_limit_law(m, c.d, lo);
    o.table.header = {"ell", "mu", "trace", "mean", "mean_stderr", "second", "second_stderr", "second_predicted", "in_K"};
    for (const auto& l : r.levels)
      o.table.rows.push_back({l.ell, l.mu, l.trace_mean, l.mean, l.mean_stderr, l.second, l.second_stderr, l.second_predicted, l.in_k});
    o.result = {{"K_min", r.k_min}, {"Kstar_second", estimate(r.k_star_second, r.k_star_second_stderr, r.k_star_samples.size())},
                {"Kstar_second_truncated", r.k_star_second_truncated}, {"Kstar_second_closed", r.k_star_second_closed},
                {"log_tail", r.tail_bound}, {"deterministic_traces", r.deterministic_traces}};
  } else if (task == "series") {
    const SeriesReport r = delta_kappa_series(m, c.d, c.ell > 0 ? c.ell : 20);
    o.table.header = {"ell", "enumerated", "spectral", "partial"};
    for (const auto& t : r.terms) o.table.rows.push_back({t.ell, num(t.enumerated), t.spectral, t.partial});
    o.result = {{"closed_form", num(r.closed_form)}};
  } else if (task == "coloring") {
    const ColoringConstant k = coloring_limit_constant(c.q, c.d, c.ell > 0 ? c.ell : 10);
    o.result = {{"prefactor", k.prefactor}, {"delta", k.delta}};
  } else if (task == "simplicity") {
    if (c.n <= 0) throw ConfigError("cycles simplicity: need --n");
    const FrequencyEstimate f = simplicity_frequency(c.n, c.d, m, default_trials(c, 2000), c.seed);
    o.result = {{"frequency", estimate(f.value, f.stderr, static_cast<std::uint64_t>(f.trials))},
                {"limit", simplicity_probability(c.d, m.k())}};
  } else {
    throw ConfigError("cycles: unknown task '" + task + "'");
  }
  return o;
}

Output cmd_recon(const RunConfig& c, const ConstraintModel& m) {
  Output o;
  CorrOptions co{default_trials(c, 1000), c.seed, c.threads};
  const int ell = c.ell > 0 ? c.ell : 8;
  const std::string task = c.task.empty() ? "corr" : c.task;
  o.table.header = {"d", "ell", "corr", "stderr", "trials"};
  if (task == "corr") {
    const CorrEstimate e = corr_star(c.d, m, ell, co);
    o.table.rows.push_back({e.d, e.ell, e.value, e.stderr, e.trials});
    o.result = {{"corr", estimate(e.value, e.stderr, static_cast<std::uint64_t>(e.trials))}, {"mean_tree_size", e.mean_tree_size}};
  } else if (task == "drec") {
    std::optional<double> cap;
    if (c.dcond_upper > 0.0) cap = c.dcond_upper;
    const DrecResult r = drec_estimate(m, c.dlo, c.dhi, ell, c.told, co, cap);
    for (const auto& e : r.curve) o.table.rows.push_back({e.d, e.ell, e.value, e.stderr, e.trials});
    o.result = {{"lower", r.lower}, {"upper", r.upper}};
    o.result["capped_upper"] = r.capped_upper ? json(*r.capped_upper) : json(nullptr);
  } else {
    throw ConfigError("recon: unknown task '" + task + "'");
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"cspphase: phase transitions of random constraint satisfaction problems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--model", cfg.model, "naesat|coloring|balanced-sat|parity-majority|ksat or a JSON file");
    sub->add_option("--k,--kk", cfg.k, "family parameter (arity; k of parity-majority)");
    sub->add_option("--q", cfg.q, "number of colours (coloring)");
    sub->add_option("--beta", cfg.beta, "soften with exp(-beta)");
    sub->add_option("--seed", cfg.seed);
    sub->add_option("--threads", cfg.threads, "0: CSPPHASE_THREADS or hardware");
    sub->add_option("--out", cfg.out, "output file (atomic write); stdout if absent");
    sub->add_option("--format", cfg.format)->check(CLI::IsMember({"json", "csv"}));
  };
  auto knobs = [&](CLI::App* sub) {
    sub->add_option("--d", cfg.d, "average degree");
    sub->add_option("--n", cfg.n);
    sub->add_option("--m", cfg.m);
    sub->add_option("--trials", cfg.trials);
    sub->add_option("--ell", cfg.ell);
    sub->add_option("--instance", cfg.instance, "instance JSON file");
    sub->add_flag("--simple", cfg.simple, "condition on a simple factor graph");
  };

  struct Sub {
    CLI::App* app;
    Output (*run)(const RunConfig&, const ConstraintModel&);
  };
  std::vector<Sub> subs;

  auto* model = app.add_subcommand("model", "show or validate a model");
  common(model);
  model->add_option("action", cfg.task)->check(CLI::IsMember({"show", "validate"}))->required();
  subs.push_back({model, cmd_model});

  auto* check = app.add_subcommand("check", "check SYM, BAL, MIN, POS, UNI");
  common(check);
  check->add_option("--trials", cfg.trials, "POS Monte Carlo trials");
  subs.push_back({check, cmd_check});

  auto* ks = app.add_subcommand("ks", "spectral report and Kesten-Stigum bound");
  common(ks);
  subs.push_back({ks, cmd_ks});

  auto* bethe = app.add_subcommand("bethe", "evaluate the Bethe functional");
  common(bethe);
  bethe->add_option("--d", cfg.d);
  bethe->add_option("--pi", cfg.pi, "uniform | pd | JSON file with points/weights");
  bethe->add_option("--samples", cfg.samples);
  bethe->add_option("--N", cfg.population, "population size for --pi pd");
  bethe->add_option("--sweeps", cfg.sweeps);
  bethe->add_option("--init", cfg.init);
  bethe->add_option("--epsilon", cfg.epsilon);
  bethe->add_flag("--gap", cfg.gap, "also estimate the gap to the trivial value");
  subs.push_back({bethe, cmd_bethe});

  auto* dcond = app.add_subcommand("dcond", "bracket the condensation threshold");
  common(dcond);
  dcond->add_option("--dlo", cfg.dlo);
  dcond->add_option("--dhi", cfg.dhi);
  dcond->add_option("--told", cfg.told);
  dcond->add_option("--samples", cfg.samples);
  dcond->add_option("--N", cfg.population);
  dcond->add_option("--sweeps", cfg.sweeps);
  dcond->add_option("--seeds", cfg.seeds);
  dcond->add_option("--epsilon", cfg.epsilon);
  subs.push_back({dcond, cmd_dcond});

  auto* sample = app.add_subcommand("sample", "sample instances or assignments");
  common(sample);
  knobs(sample);
  sample->add_option("--kind", cfg.kind, "null | planted | sigma-hat | pinned");
  sample->add_option("--theta", cfg.theta, "pinning bound");
  subs.push_back({sample, cmd_sample});

  auto* oracle = app.add_subcommand("oracle", "exact enumeration and moments");
  common(oracle);
  knobs(oracle);
  oracle->add_option("task", cfg.task, "z | marginals | epsilon | overlap | moments | nishimori");
  subs.push_back({oracle, cmd_oracle});

  auto* cycles = app.add_subcommand("cycles", "cycle signatures and the limiting law");
  common(cycles);
  knobs(cycles);
  cycles->add_option("task", cfg.task, "constants | count | poisson-test | limitlaw | series | coloring | simplicity");
  cycles->add_option("--signature", cfg.signature, "w:s>t,... (1-based positions); ';' separates signatures");
  cycles->add_option("--order", cfg.order, "all signatures of this order");
  cycles->add_option("--kind", cfg.kind, "null | planted");
  subs.push_back({cycles, cmd_cycles});

  auto* recon = app.add_subcommand("recon", "tree reconstruction");
  common(recon);
  knobs(recon);
  recon->add_option("task", cfg.task, "corr | drec");
  recon->add_option("--dlo", cfg.dlo);
  recon->add_option("--dhi", cfg.dhi);
  recon->add_option("--told", cfg.told);
  recon->add_option("--dcond-upper", cfg.dcond_upper, "cap for the d_rec bracket");
  subs.push_back({recon, cmd_recon});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    cfg.threads = resolve_threads(cfg.threads);
    for (const auto& s : subs) {
      if (!s.app->parsed()) continue;
      cfg.command = s.app->get_name();
      const ConstraintModel m = resolve_model(cfg);
      const Output out = s.run(cfg, m);
      emit(cfg.out, render(cfg, &m, out));
      return 0;
    }
    std::cerr << "error: unknown command\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const SizeGuardError& e) {
    std::cerr << "size guard: " << e.what() << '\n';
    return 3;
  } catch (const NumericRefusal& e) {
    std::cerr << "numeric refusal: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
