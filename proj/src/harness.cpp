#include "rcising/harness.hpp"

#include <stdlib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

#include "rcising/currents.hpp"
#include "rcising/diagrams.hpp"
#include "rcising/graph.hpp"
#include "rcising/gs_blocks.hpp"
#include "rcising/verification.hpp"
#include "rcising/worm_mc.hpp"

namespace rcising {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

// ---------------------------------------------------------------- config access

Json to_json(const toml::node& node, const std::string& where) {
  if (auto v = node.as_integer()) return v->get();
  if (auto v = node.as_floating_point()) return v->get();
  if (auto v = node.as_boolean()) return v->get();
  if (auto v = node.as_string()) return v->get();
  if (auto arr = node.as_array()) {
    Json out = Json::array();
    for (const auto& item : *arr) out.push_back(to_json(item, where));
    return out;
  }
  if (auto tbl = node.as_table()) {
    Json out = Json::object();
    for (const auto& [key, value] : *tbl)
      out[std::string(key.str())] = to_json(value, where + "." + std::string(key.str()));
    return out;
  }
  throw ConfigError("unsupported value type at '" + where + "'");
}

/// Typed, strict view of a TOML table. Every key must be consumed.
class Fields {
 public:
  Fields(const toml::table& table, std::string context)
      : table_(table), context_(std::move(context)) {}

  bool has(const std::string& key) const { return table_.contains(key); }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback = {}) {
    const toml::node* node = lookup(key, fallback.has_value());
    if (!node) return *fallback;
    if (auto v = node->as_integer()) return v->get();
    throw type_error(key, "an integer");
  }
  std::int64_t positive(const std::string& key, std::optional<std::int64_t> fallback = {}) {
    const auto v = integer(key, fallback);
    if (v <= 0) throw ConfigError(name(key) + " must be positive");
    return v;
  }
  double number(const std::string& key, std::optional<double> fallback = {}) {
    const toml::node* node = lookup(key, fallback.has_value());
    if (!node) return *fallback;
    return as_number(*node, key);
  }
  bool boolean(const std::string& key, bool fallback) {
    const toml::node* node = lookup(key, true);
    if (!node) return fallback;
    if (auto v = node->as_boolean()) return v->get();
    throw type_error(key, "a boolean");
  }
  std::string string(const std::string& key, std::optional<std::string> fallback = {}) {
    const toml::node* node = lookup(key, fallback.has_value());
    if (!node) return *fallback;
    if (auto v = node->as_string()) return v->get();
    throw type_error(key, "a string");
  }
  std::vector<std::int64_t> integers(const std::string& key,
                                     std::optional<std::vector<std::int64_t>> fallback = {}) {
    const toml::node* node = lookup(key, fallback.has_value());
    if (!node) return *fallback;
    const auto* arr = node->as_array();
    if (!arr || arr->empty()) throw type_error(key, "a non-empty array of integers");
    std::vector<std::int64_t> out;
    for (const auto& item : *arr) {
      auto v = item.as_integer();
      if (!v) throw type_error(key, "a non-empty array of integers");
      out.push_back(v->get());
    }
    return out;
  }
  std::vector<double> numbers(const std::string& key,
                              std::optional<std::vector<double>> fallback = {}) {
    const toml::node* node = lookup(key, fallback.has_value());
    if (!node) return *fallback;
    const auto* arr = node->as_array();
    if (!arr || arr->empty()) throw type_error(key, "a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& item : *arr) out.push_back(as_number(item, key));
    return out;
  }
  /// Array of integer arrays, each of length `arity`.
  std::vector<std::vector<std::int64_t>> tuples(const std::string& key, std::size_t arity) {
    const toml::node* node = lookup(key, true);
    if (!node) return {};
    const auto* arr = node->as_array();
    const std::string expected = "an array of " + std::to_string(arity) + "-integer arrays";
    if (!arr) throw type_error(key, expected);
    std::vector<std::vector<std::int64_t>> out;
    for (const auto& item : *arr) {
      const auto* inner = item.as_array();
      if (!inner || inner->size() != arity) throw type_error(key, expected);
      std::vector<std::int64_t> t;
      for (const auto& x : *inner) {
        auto v = x.as_integer();
        if (!v) throw type_error(key, expected);
        t.push_back(v->get());
      }
      out.push_back(std::move(t));
    }
    return out;
  }
  const toml::table* table(const std::string& key) {
    const toml::node* node = lookup(key, true);
    if (!node) return nullptr;
    if (auto t = node->as_table()) return t;
    throw type_error(key, "a table");
  }
  void ignore(const std::string& key) { used_.insert(key); }

  /// Throws on keys that no reader consumed.
  void finish() const {
    for (const auto& [key, value] : table_) {
      const std::string k(key.str());
      if (!used_.count(k)) throw ConfigError("unknown key " + name(k));
    }
  }

 private:
  std::string name(const std::string& key) const {
    return "'" + (context_.empty() ? key : context_ + "." + key) + "'";
  }
  const toml::node* lookup(const std::string& key, bool optional) {
    used_.insert(key);
    const toml::node* node = table_.get(key);
    if (!node && !optional) throw ConfigError("missing required field " + name(key));
    return node;
  }
  double as_number(const toml::node& node, const std::string& key) const {
    if (auto v = node.as_floating_point()) return v->get();
    if (auto v = node.as_integer()) return static_cast<double>(v->get());
    throw type_error(key, "a number");
  }
  ConfigError type_error(const std::string& key, const std::string& expected) const {
    return ConfigError(name(key) + " must be " + expected);
  }

  const toml::table& table_;
  std::string context_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------- run context

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct PlotPoint {
  double x, y, error;
};

/// Single sink for every record and plot point of one experiment.
class RunContext {
 public:
  RunContext(const ExperimentConfig& config, const fs::path& dir)
      : config_(config), start_(std::chrono::steady_clock::now()) {
    csv_.open(dir / "results.csv");
    if (!csv_) throw std::runtime_error("cannot write " + (dir / "results.csv").string());
    csv_ << csv_header() << '\n';
    csv_.flush();
  }

  void record(const std::string& observable, double value, double error = 0.0,
              std::optional<int> L = {}, std::optional<double> beta = {},
              std::optional<std::uint64_t> seed = {}) {
    ResultRecord r{config_.experiment_id, config_.kind, observable, value, error, L, beta, seed,
                   config_.input_hash};
    csv_ << csv_row(r) << '\n';
    csv_.flush();
    ++records_;
  }
  void record(const std::string& observable, const Estimate& e, std::optional<int> L,
              std::optional<double> beta, std::optional<std::uint64_t> seed) {
    record(observable, e.mean, e.error, L, beta, seed);
  }

  void plot(const std::string& series, double x, double y, double error = 0.0) {
    plots_[series].push_back({x, y, error});
  }

  void check_budget(const std::string& next_task) const {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (elapsed > config_.budget_seconds)
      throw BudgetExceeded("wall-clock budget of " + format_double(config_.budget_seconds) +
                           " s exhausted before " + next_task);
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  std::size_t records() const { return records_; }
  const std::map<std::string, std::vector<PlotPoint>>& plots() const { return plots_; }
  Json& summary() { return summary_; }
  Json& metadata() { return metadata_; }
  bool verification_passed = true;
  bool is_verification = false;

 private:
  const ExperimentConfig& config_;
  std::ofstream csv_;
  std::size_t records_ = 0;
  std::map<std::string, std::vector<PlotPoint>> plots_;
  Json summary_ = Json::object();
  Json metadata_ = Json::object();
  std::chrono::steady_clock::time_point start_;
};

using Runner = std::function<void(RunContext&)>;

// ---------------------------------------------------------------- shared helpers

std::vector<std::uint64_t> read_seeds(Fields& f) {
  const auto raw = f.integers("seeds");
  std::vector<std::uint64_t> out;
  for (auto s : raw) {
    if (s < 0) throw ConfigError("'seeds' must be non-negative");
    out.push_back(static_cast<std::uint64_t>(s));
  }
  return out;
}

int read_dimension(Fields& f) {
  const auto d = f.integer("d");
  if (d < 1 || d > 6) throw ConfigError("'d' must lie in [1, 6]");
  return static_cast<int>(d);
}

std::vector<int> read_sizes(Fields& f, const std::string& key, int minimum) {
  std::vector<int> out;
  for (auto L : f.integers(key)) {
    if (L < minimum || L > 4096)
      throw ConfigError("'" + key + "' entries must lie in [" + std::to_string(minimum) +
                        ", 4096]");
    out.push_back(static_cast<int>(L));
  }
  return out;
}

double read_beta(Fields& f, const std::string& key) {
  const double beta = f.number(key);
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("'" + key + "' must be >= 0");
  return beta;
}

struct McBudget {
  std::size_t sweeps;
  std::optional<std::size_t> thermalization;
  std::size_t bins;
};

McBudget read_mc(Fields& f, std::int64_t default_sweeps) {
  McBudget mc;
  mc.sweeps = static_cast<std::size_t>(f.positive("sweeps", default_sweeps));
  if (f.has("thermalization")) {
    const auto t = f.integer("thermalization");
    if (t < 0) throw ConfigError("'thermalization' must be non-negative");
    mc.thermalization = static_cast<std::size_t>(t);
  } else {
    f.ignore("thermalization");
  }
  mc.bins = static_cast<std::size_t>(f.positive("bins", 16));
  if (mc.bins < 2) throw ConfigError("'bins' must be at least 2");
  return mc;
}

std::shared_ptr<const CouplingGraph> torus(int d, int L, double J = 1.0) {
  return std::make_shared<const CouplingGraph>(build_lattice({d, L, J, Boundary::Periodic}));
}

RunConfig make_run(std::shared_ptr<const CouplingGraph> graph, double beta, const McBudget& mc,
                   std::uint64_t seed, std::uint64_t stream) {
  RunConfig cfg;
  cfg.graph = std::move(graph);
  cfg.beta = beta;
  cfg.sweeps = mc.sweeps;
  cfg.thermalization = mc.thermalization;
  cfg.seed = seed;
  cfg.stream = stream;
  cfg.bins = mc.bins;
  return cfg;
}

void note_convention(RunContext& ctx, const std::string& convention) {
  if (!convention.empty()) ctx.metadata()["block_convention"] = convention;
}

void store_suite(RunContext& ctx, const SuiteReport& report, std::optional<std::uint64_t> seed) {
  ctx.is_verification = true;
  Json worst = Json::object();
  for (const auto& [name, value] : report.worst()) {
    worst[name] = value;
    ctx.record(report.suite + ".worst_residual[" + name + "]", value, 0.0, {}, {}, seed);
  }
  ctx.record(report.suite + ".checks", static_cast<double>(report.checks.size()), 0.0, {}, {}, seed);
  ctx.record(report.suite + ".failures", static_cast<double>(report.failures()), 0.0, {}, {}, seed);
  Json failures = Json::array();
  for (const Check& c : report.checks) {
    if (c.passed || failures.size() >= 20) continue;
    failures.push_back({{"check", c.name}, {"instance", c.instance}, {"lhs", c.lhs},
                        {"rhs", c.rhs}, {"residual", c.residual}});
  }
  ctx.summary()["suites"][report.suite] = {{"passed", report.passed()},
                                           {"instances", report.instances},
                                           {"checks", report.checks.size()},
                                           {"failures", report.failures()},
                                           {"worst_residual", worst},
                                           {"first_failures", failures}};
  if (!report.passed()) ctx.verification_passed = false;
}

CorpusOptions read_corpus(Fields& f, std::size_t default_count) {
  CorpusOptions c;
  const auto seed = f.integer("corpus_seed", static_cast<std::int64_t>(c.seed));
  if (seed < 0) throw ConfigError("'corpus_seed' must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.count = static_cast<std::size_t>(f.positive("count", static_cast<std::int64_t>(default_count)));
  c.max_vertices = static_cast<std::size_t>(f.positive("max_vertices", 6));
  c.max_edges = static_cast<std::size_t>(f.positive("max_edges", 8));
  if (c.max_vertices < 2 || c.max_vertices > 10)
    throw ConfigError("'max_vertices' must lie in [2, 10]");
  if (c.max_edges + 1 < c.max_vertices || c.max_edges > 16)
    throw ConfigError("'max_edges' must lie in [max_vertices - 1, 16]");
  return c;
}

/// Corners of a square of the given side, centered in the torus, in the
/// first two coordinates (others at L/2), in cyclic order.
std::array<Vertex, 4> centered_square(const LatticeSpec& lattice, int side) {
  if (lattice.d < 2) throw McError("square points need d >= 2");
  const int start = lattice.L / 2 - side / 2;
  auto at = [&](int a, int b) {
    std::vector<int> c(static_cast<std::size_t>(lattice.d), lattice.L / 2);
    c[0] = ((a % lattice.L) + lattice.L) % lattice.L;
    c[1] = ((b % lattice.L) + lattice.L) % lattice.L;
    return lattice_index(lattice, c);
  };
  return {at(start, start), at(start, start + side), at(start + side, start + side),
          at(start + side, start)};
}

std::string quad_key(const char* prefix, const std::array<Vertex, 4>& q) {
  return std::string(prefix) + "[" + std::to_string(q[0]) + "," + std::to_string(q[1]) + "," +
         std::to_string(q[2]) + "," + std::to_string(q[3]) + "]";
}

// ---------------------------------------------------------------- kinds

Runner plan_verify_identities(Fields& f) {
  const CorpusOptions corpus = read_corpus(f, 200);
  const double tolerance = f.number("tolerance", 1e-10);
  const bool with_inequalities = f.boolean("inequalities", true);
  return [=](RunContext& ctx) {
    const auto instances = random_corpus(corpus);
    ctx.metadata()["corpus_seed"] = corpus.seed;
    store_suite(ctx, identity_suite(instances, tolerance), corpus.seed);
    if (with_inequalities) {
      ctx.check_budget("the inequality suite");
      store_suite(ctx, inequality_suite(instances, tolerance), corpus.seed);
    }
  };
}

Runner plan_verify_switching(Fields& f) {
  const CorpusOptions corpus = read_corpus(f, 120);
  const double tolerance = f.number("tolerance", 1e-10);
  return [=](RunContext& ctx) {
    ctx.metadata()["corpus_seed"] = corpus.seed;
    store_suite(ctx, switching_suite(random_corpus(corpus), tolerance), corpus.seed);
  };
}

Runner plan_verify_pfaffian(Fields& f) {
  PfaffianSuiteOptions opts;
  if (f.has("grids")) {
    opts.grids.clear();
    for (const auto& g : f.tuples("grids", 2)) {
      if (g[0] < 2 || g[1] < 2 || g[0] * g[1] > 20)
        throw ConfigError("'grids' entries must be at least 2 x 2 with at most 20 sites");
      opts.grids.emplace_back(static_cast<int>(g[0]), static_cast<int>(g[1]));
    }
  } else {
    f.ignore("grids");
  }
  opts.betas = f.numbers("betas", opts.betas);
  std::vector<std::size_t> counts;
  for (auto k : f.integers("points", std::vector<std::int64_t>{4, 6})) {
    if (k < 2 || k % 2 != 0) throw ConfigError("'points' entries must be even and >= 2");
    counts.push_back(static_cast<std::size_t>(k));
  }
  opts.point_counts = counts;
  opts.subsets_per_case = static_cast<std::size_t>(f.positive("subsets", 24));
  opts.seed = static_cast<std::uint64_t>(f.integer("point_seed", 7));
  opts.tolerance = f.number("tolerance", 1e-9);
  return [=](RunContext& ctx) { store_suite(ctx, pfaffian_suite(opts), opts.seed); };
}

Runner plan_gs_match(Fields& f) {
  TargetMeasure target{f.number("lambda", 1.0), f.number("b", 0.0)};
  if (!(target.lambda > 0.0)) throw ConfigError("'lambda' must be positive");
  std::vector<std::size_t> sizes;
  for (auto N : f.integers("sizes", std::vector<std::int64_t>{64, 256, 1024, 4096})) {
    if (N < 1 || static_cast<std::size_t>(N) > kMaxBlockSize)
      throw ConfigError("'sizes' entries must lie in [1, " + std::to_string(kMaxBlockSize) + "]");
    sizes.push_back(static_cast<std::size_t>(N));
  }
  const double tolerance = f.number("tolerance", 1e-6);
  return [=](RunContext& ctx) {
    ctx.is_verification = true;
    const auto t = target_moments(target, 6);
    ctx.record("target.m2", t[2]);
    ctx.record("target.m4", t[4]);
    ctx.record("target.m6", t[6]);
    double worst = 0.0;
    for (std::size_t N : sizes) {
      ctx.check_budget("block size " + std::to_string(N));
      const auto L = static_cast<int>(N);
      try {
        const TuneResult tuned = tune(N, target);
        const auto m = block_moments(tuned.params, 6);
        const double m6_error = std::abs(m[6] - t[6]) / t[6];
        ctx.record("alpha", tuned.params.alpha, 0.0, L);
        ctx.record("g", tuned.params.g, 0.0, L);
        ctx.record("residual", tuned.residual, 0.0, L);
        ctx.record("m6_relative_error", m6_error, 0.0, L);
        ctx.plot("m6_relative_error_vs_N", static_cast<double>(N), m6_error);
        worst = std::max(worst, tuned.residual);
      } catch (const GsError& e) {
        ctx.record("converged", 0.0, 0.0, L);
        ctx.summary()["non_convergent"].push_back({{"N", N}, {"message", e.what()}});
      }
    }
    ctx.summary()["worst_residual"] = worst;
    ctx.summary()["tolerance"] = tolerance;
    if (worst > tolerance) ctx.verification_passed = false;
  };
}

std::shared_ptr<const CouplingGraph> read_graph(Fields& f) {
  const toml::table* tbl = f.table("graph");
  if (!tbl) throw ConfigError("missing required field 'graph'");
  Fields g(*tbl, "graph");
  std::shared_ptr<const CouplingGraph> out;
  if (g.has("file")) {
    const std::string path = g.string("file");
    try {
      out = std::make_shared<const CouplingGraph>(load_graph(path));
    } catch (const GraphError& e) {
      throw ConfigError(std::string("graph file: ") + e.what());
    }
  } else {
    LatticeSpec spec;
    spec.d = read_dimension(g);
    spec.L = static_cast<int>(g.positive("L"));
    spec.J = g.number("J", 1.0);
    const std::string bc = g.string("bc", "periodic");
    if (bc == "periodic")
      spec.bc = Boundary::Periodic;
    else if (bc == "free")
      spec.bc = Boundary::Free;
    else
      throw ConfigError("'graph.bc' must be \"periodic\" or \"free\"");
    try {
      out = std::make_shared<const CouplingGraph>(build_lattice(spec));
    } catch (const GraphError& e) {
      throw ConfigError(std::string("graph: ") + e.what());
    }
  }
  g.finish();
  return out;
}

Runner plan_mc_run(Fields& f) {
  const auto graph = read_graph(f);
  const auto betas = f.numbers("betas");
  for (double b : betas)
    if (!(b >= 0.0)) throw ConfigError("'betas' entries must be >= 0");
  const auto seeds = read_seeds(f);
  const McBudget mc = read_mc(f, 10'000);
  const std::string algorithm = f.string("algorithm", "wolff");
  if (algorithm != "wolff" && algorithm != "worm")
    throw ConfigError("'algorithm' must be \"wolff\" or \"worm\"");
  const auto n = graph->num_vertices();
  auto vertex = [n](std::int64_t v, const char* key) {
    if (v < 0 || static_cast<std::size_t>(v) >= n)
      throw ConfigError(std::string("'") + key + "' names a vertex outside the graph");
    return static_cast<Vertex>(v);
  };
  SpinObservables obs;
  for (const auto& p : f.tuples("pairs", 2))
    obs.pairs.emplace_back(vertex(p[0], "pairs"), vertex(p[1], "pairs"));
  for (const auto& q : f.tuples("quadruples", 4))
    obs.quadruples.push_back({vertex(q[0], "quadruples"), vertex(q[1], "quadruples"),
                              vertex(q[2], "quadruples"), vertex(q[3], "quadruples")});
  if (f.has("block_side")) {
    obs.block_side = static_cast<int>(f.positive("block_side"));
    if (!graph->lattice()) throw ConfigError("'block_side' needs a lattice graph");
  } else {
    f.ignore("block_side");
  }
  if (algorithm == "worm" && !obs.quadruples.empty())
    throw ConfigError("'quadruples' are measured by the wolff algorithm only");
  const std::optional<int> L =
      graph->lattice() ? std::optional<int>(graph->lattice()->L) : std::nullopt;
  return [=](RunContext& ctx) {
    for (std::size_t bi = 0; bi < betas.size(); ++bi)
      for (std::uint64_t seed : seeds) {
        ctx.check_budget("beta " + format_double(betas[bi]) + ", seed " + std::to_string(seed));
        RunConfig cfg = make_run(graph, betas[bi], mc, seed, bi);
        if (algorithm == "wolff") {
          cfg.observables = obs;
          const SpinRunResult r = wolff_run(cfg);
          for (const auto& [name, e] : r.estimates) ctx.record(name, e, L, betas[bi], seed);
          note_convention(ctx, r.block_convention);
          ctx.metadata()["update"] = r.update == SpinUpdate::Wolff ? "wolff" : "metropolis";
        } else {
          WormObservables wobs{obs.pairs, obs.block_side};
          const WormRunResult r = worm_run(cfg, {}, wobs);
          for (const auto& [name, e] : r.estimates) ctx.record(name, e, L, betas[bi], seed);
          ctx.record("closed_samples", static_cast<double>(r.closed_samples), 0.0, L, betas[bi],
                     seed);
        }
      }
    ctx.metadata()["sweeps"] = mc.sweeps;
    ctx.metadata()["algorithm"] = algorithm;
  };
}

Runner plan_scan_rl(Fields& f) {
  const int d = read_dimension(f);
  const auto sizes = read_sizes(f, "sizes", 2);
  const double beta = read_beta(f, "beta");
  const double J = f.number("J", 1.0);
  const auto seeds = read_seeds(f);
  const McBudget mc = read_mc(f, 20'000);
  const bool tree_ratio = f.boolean("tree_ratio", true);
  return [=](RunContext& ctx) {
    for (std::uint64_t seed : seeds)
      for (std::size_t i = 0; i < sizes.size(); ++i) {
        const int L = sizes[i];
        ctx.check_budget("L = " + std::to_string(L) + ", seed " + std::to_string(seed));
        const auto graph = torus(d, L, J);
        RunConfig cfg = make_run(graph, beta, mc, seed, i);
        cfg.observables.block_side = L;
        cfg.observables.full_profile = tree_ratio;
        const SpinRunResult r = wolff_run(cfg);
        note_convention(ctx, r.block_convention);
        const Estimate& R = r.estimates.at("R");
        ctx.record("R", R, L, beta, seed);
        ctx.record("R_in_range", (R.mean >= 0.0 && R.mean <= 2.0) ? 1.0 : 0.0, 0.0, L, beta, seed);
        for (const char* name : {"block_M2", "block_M4", "binder"})
          ctx.record(name, r.estimates.at(name), L, beta, seed);
        ctx.plot("R_L_vs_L seed " + std::to_string(seed), L, R.mean, R.error);
        if (tree_ratio) {
          // With the block equal to the torus: sum |U4| = R (V chi)^2 and the
          // summed tree diagram is 2 V chi^4.
          double chi = 0.0, bubble_full = 0.0;
          for (const Estimate& e : r.profile) {
            chi += e.mean;
            bubble_full += e.mean * e.mean;
          }
          const double volume = static_cast<double>(graph->num_vertices());
          const double scale = volume / (2.0 * chi * chi);
          ctx.record("tree_ratio", R.mean * scale, R.error * scale, L, beta, seed);
          ctx.record("bubble_L", bubble_full, 0.0, L, beta, seed);
          ctx.record("xi_2nd", r.estimates.at("xi_2nd"), L, beta, seed);
          ctx.plot("tree_ratio_vs_bubble seed " + std::to_string(seed), bubble_full,
                   R.mean * scale, R.error * scale);
        }
      }
    ctx.metadata()["sweeps"] = mc.sweeps;
    ctx.metadata()["block"] = "block side equals torus side";
  };
}

Runner plan_locate_betac(Fields& f) {
  const int d = read_dimension(f);
  const auto sizes = read_sizes(f, "sizes", 2);
  if (sizes.size() < 2) throw ConfigError("'sizes' needs at least two lattice sizes");
  const double lo = read_beta(f, "beta_lo");
  const double hi = read_beta(f, "beta_hi");
  if (!(lo < hi)) throw ConfigError("'beta_lo' must be below 'beta_hi'");
  const auto seeds = read_seeds(f);
  BetaCOptions base;
  base.sweeps = static_cast<std::size_t>(f.positive("sweeps", 20'000));
  base.bins = static_cast<std::size_t>(f.positive("bins", 16));
  base.max_bisections = static_cast<int>(f.positive("max_bisections", 12));
  base.relative_tolerance = f.number("relative_tolerance", 5e-4);
  base.significance = f.number("significance", 2.0);
  return [=](RunContext& ctx) {
    for (std::uint64_t seed : seeds) {
      ctx.check_budget("seed " + std::to_string(seed));
      BetaCOptions opts = base;
      opts.seed = seed;
      const BetaCEstimate est = locate_beta_c(d, sizes, lo, hi, opts);
      ctx.record("beta_c", est.beta_c, est.half_width, {}, {}, seed);
      ctx.record("evaluations", est.evaluations, 0.0, {}, {}, seed);
    }
    ctx.metadata()["sweeps"] = base.sweeps;
  };
}

Runner plan_s2_diagnostics(Fields& f) {
  const int d = read_dimension(f);
  const int L = static_cast<int>(f.positive("L"));
  if (L < 4) throw ConfigError("'L' must be at least 4");
  const double beta = read_beta(f, "beta");
  const double J = f.number("J", 1.0);
  const auto seeds = read_seeds(f);
  const McBudget mc = read_mc(f, 20'000);
  const double r_min = f.number("r_min", 1.0);
  const double r_max = f.number("r_max", L / 2.0);
  const double k_sigma = f.number("k_sigma", 2.0);
  const auto ells = f.numbers("ells", std::vector<double>{2, 4, 8});
  return [=](RunContext& ctx) {
    const LatticeSpec lattice{d, L, J, Boundary::Periodic};
    const auto graph = torus(d, L, J);
    for (std::uint64_t seed : seeds) {
      ctx.check_budget("seed " + std::to_string(seed));
      RunConfig cfg = make_run(graph, beta, mc, seed, 0);
      cfg.observables.full_profile = true;
      const SpinRunResult r = wolff_run(cfg);
      const RadialProfile radial = radial_profile(lattice, r.profile_bins);
      const S2Report report = s2_diagnostics(radial, d, beta * J, r_min, r_max, k_sigma);
      ctx.record("degenerate", report.degenerate ? 1.0 : 0.0, 0.0, L, beta, seed);
      if (!report.degenerate) ctx.record("exponent", report.exponent, L, beta, seed);
      ctx.record("C2", report.c2, 0.0, L, beta, seed);
      ctx.record("infrared_consistent", report.infrared_consistent ? 1.0 : 0.0, 0.0, L, beta, seed);
      ctx.record("scaled_non_increasing", report.scaled_non_increasing ? 1.0 : 0.0, 0.0, L, beta,
                 seed);
      for (const DyadicClass& c : report.classes) {
        ctx.record("scaled[" + format_double(c.r_lo) + "-" + format_double(c.r_hi) + ")", c.scaled,
                   L, beta, seed);
        ctx.plot("scaled_S2_vs_r seed " + std::to_string(seed), c.r_lo, c.scaled.mean,
                 c.scaled.error);
      }
      // Bubble diagram per scale, jackknifed over profile bins.
      std::vector<double> distance(graph->num_vertices());
      for (Vertex v = 0; v < distance.size(); ++v) distance[v] = graph_distance(*graph, 0, v);
      std::vector<std::vector<double>> table(distance.size(),
                                             std::vector<double>(r.profile_bins.size()));
      for (std::size_t b = 0; b < r.profile_bins.size(); ++b)
        for (std::size_t x = 0; x < distance.size(); ++x) table[x][b] = r.profile_bins[b][x];
      bool increasing = true;
      double previous = -1.0;
      for (double ell : ells) {
        const Estimate B = jackknife_from_bins(
            table,
            [&](std::span<const double> m) {
              double s = 0.0;
              for (std::size_t x = 0; x < m.size(); ++x)
                if (distance[x] < ell) s += m[x] * m[x];
              return s;
            },
            0, seed);
        ctx.record("B[" + format_double(ell) + "]", B, L, beta, seed);
        ctx.plot("bubble_vs_ell seed " + std::to_string(seed), ell, B.mean, B.error);
        if (!(B.mean > previous)) increasing = false;
        previous = B.mean;
      }
      ctx.record("bubble_increasing", increasing ? 1.0 : 0.0, 0.0, L, beta, seed);
      ctx.summary()["notes"].push_back(report.note);
    }
    ctx.metadata()["sweeps"] = mc.sweeps;
  };
}

Runner plan_intersection_scan(Fields& f) {
  const int d = read_dimension(f);
  if (d < 2) throw ConfigError("'d' must be at least 2 for intersection scans");
  const auto sizes = read_sizes(f, "sizes", 4);
  const double beta = read_beta(f, "beta");
  const double J = f.number("J", 1.0);
  const auto seeds = read_seeds(f);
  const McBudget mc = read_mc(f, 20'000);
  return [=](RunContext& ctx) {
    for (std::uint64_t seed : seeds)
      for (std::size_t i = 0; i < sizes.size(); ++i) {
        const int L = sizes[i];
        ctx.check_budget("L = " + std::to_string(L) + ", seed " + std::to_string(seed));
        const LatticeSpec lattice{d, L, J, Boundary::Periodic};
        const auto graph = torus(d, L, J);
        // Diagonal pairs of the centered square: the two source paths cross.
        const auto sq = centered_square(lattice, L / 2);
        const RunConfig cfg = make_run(graph, beta, mc, seed, i);
        const IntersectionStats s = intersection_stats(cfg, sq[0], sq[2], sq[1], sq[3]);
        ctx.record("p_nonempty", s.p_nonempty, L, beta, seed);
        ctx.record("mean_size", s.mean_size, L, beta, seed);
        ctx.record("mean_size_given_nonempty", s.mean_size_given_nonempty, L, beta, seed);
        ctx.plot("mean_size_given_nonempty_vs_L seed " + std::to_string(seed), L,
                 s.mean_size_given_nonempty.mean, s.mean_size_given_nonempty.error);
        if (graph->num_vertices() <= kClusterLawCap) {
          const IntersectionLaw exact =
              exact_intersection(*graph, beta, sq[0], sq[2], sq[1], sq[3]);
          ctx.record("exact.p_nonempty", exact.p_nonempty, 0.0, L, beta, seed);
          ctx.record("exact.mean_size", exact.mean_size, 0.0, L, beta, seed);
          ctx.record("exact.mean_size_given_nonempty", exact.mean_size_given_nonempty, 0.0, L,
                     beta, seed);
        }
      }
    ctx.metadata()["sweeps"] = mc.sweeps;
    ctx.metadata()["points"] = "diagonals of the centered square of side L/2";
  };
}

/// Free strip with nearest and next-nearest (diagonal) couplings; row 0 is
/// the boundary line.
std::shared_ptr<const CouplingGraph> nnn_strip(int rows, int cols, double j_nn, double j_nnn) {
  auto at = [cols](int r, int c) { return static_cast<Vertex>(r * cols + c); };
  std::vector<Edge> edges;
  std::vector<std::vector<int>> embedding;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      embedding.push_back({r, c});
      if (c + 1 < cols) edges.push_back({at(r, c), at(r, c + 1), j_nn});
      if (r + 1 < rows) edges.push_back({at(r, c), at(r + 1, c), j_nn});
      if (j_nnn > 0.0 && r + 1 < rows) {
        if (c + 1 < cols) edges.push_back({at(r, c), at(r + 1, c + 1), j_nnn});
        if (c > 0) edges.push_back({at(r, c), at(r + 1, c - 1), j_nnn});
      }
    }
  return std::make_shared<const CouplingGraph>(static_cast<std::size_t>(rows * cols),
                                               std::move(edges), std::move(embedding));
}

Runner plan_emergent_planarity(Fields& f) {
  const int rows = static_cast<int>(f.positive("rows", 8));
  const int cols = static_cast<int>(f.positive("cols", 32));
  const double j_nnn = f.number("j_nnn", 0.5);
  if (!(j_nnn >= 0.0)) throw ConfigError("'j_nnn' must be >= 0");
  const double beta = read_beta(f, "beta");
  const auto seeds = read_seeds(f);
  const McBudget mc = read_mc(f, 20'000);
  std::vector<int> separations;
  for (auto s : f.integers("separations", std::vector<std::int64_t>{1, 2, 4, 6})) {
    if (s < 1 || 3 * s >= cols) throw ConfigError("'separations' must satisfy 1 <= 3 s < cols");
    separations.push_back(static_cast<int>(s));
  }
  if (rows < 2 || cols < 4) throw ConfigError("strip needs rows >= 2 and cols >= 4");
  return [=](RunContext& ctx) {
    const auto graph = nnn_strip(rows, cols, 1.0, j_nnn);
    SpinObservables obs;
    obs.magnetization = false;
    std::vector<std::array<Vertex, 4>> quads;
    for (int s : separations) {
      const int c0 = cols / 2 - (3 * s) / 2;
      quads.push_back({static_cast<Vertex>(c0), static_cast<Vertex>(c0 + s),
                       static_cast<Vertex>(c0 + 2 * s), static_cast<Vertex>(c0 + 3 * s)});
    }
    obs.quadruples = quads;
    for (std::uint64_t seed : seeds) {
      ctx.check_budget("seed " + std::to_string(seed));
      RunConfig cfg = make_run(graph, beta, mc, seed, 0);
      cfg.observables = obs;
      const SpinRunResult r = wolff_run(cfg);
      for (std::size_t i = 0; i < separations.size(); ++i) {
        const Estimate& res = r.estimates.at(quad_key("pfaffian_residual", quads[i]));
        const std::string tag = "[s=" + std::to_string(separations[i]) + "]";
        ctx.record("pfaffian_residual" + tag, res, {}, beta, seed);
        ctx.record("S4" + tag, r.estimates.at(quad_key("S4", quads[i])), {}, beta, seed);
        ctx.plot("pfaffian_residual_vs_separation seed " + std::to_string(seed), separations[i],
                 res.mean, res.error);
      }
    }
    ctx.metadata()["sweeps"] = mc.sweeps;
    ctx.metadata()["strip"] = {{"rows", rows}, {"cols", cols}, {"j_nnn", j_nnn}};
  };
}

Runner plan(const std::string& kind, Fields& f) {
  if (kind == "verify-identities") return plan_verify_identities(f);
  if (kind == "verify-switching") return plan_verify_switching(f);
  if (kind == "verify-pfaffian") return plan_verify_pfaffian(f);
  if (kind == "gs-match") return plan_gs_match(f);
  if (kind == "mc-run") return plan_mc_run(f);
  if (kind == "scan-rl") return plan_scan_rl(f);
  if (kind == "locate-betac") return plan_locate_betac(f);
  if (kind == "s2-diagnostics") return plan_s2_diagnostics(f);
  if (kind == "intersection-scan") return plan_intersection_scan(f);
  if (kind == "emergent-planarity") return plan_emergent_planarity(f);
  throw ConfigError("unknown experiment kind '" + kind + "'");
}

/// Keys read by the harness itself rather than by a kind.
void consume_common(Fields& f) {
  f.ignore("kind");
  f.ignore("out");
  f.ignore("budget");
  f.ignore("svg");
}

struct Parsed {
  toml::table table;
  Runner runner;
};

Parsed parse_and_plan(const std::string& kind, const std::string& text, const Overrides& o) {
  Parsed p;
  try {
    p.table = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config is not valid TOML: " << e.description() << " at " << e.source().begin;
    throw ConfigError(msg.str());
  }
  if (auto k = p.table.get("kind")) {
    auto s = k->as_string();
    if (!s) throw ConfigError("'kind' must be a string");
    if (s->get() != kind)
      throw ConfigError("config kind '" + s->get() + "' does not match subcommand '" + kind + "'");
  }
  if (o.seed) {
    toml::array seeds;
    seeds.push_back(static_cast<std::int64_t>(*o.seed));
    p.table.insert_or_assign("seeds", std::move(seeds));
  }
  if (o.budget_seconds) p.table.insert_or_assign("budget", *o.budget_seconds);
  p.table.erase("out");
  Fields f(p.table, "");
  consume_common(f);
  if (kind_info(kind).monte_carlo && !p.table.contains("seeds"))
    throw ConfigError("missing required field 'seeds'");
  p.runner = plan(kind, f);
  f.finish();
  return p;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// ---------------------------------------------------------------- plots

void write_plot_csv(const fs::path& path, const std::map<std::string, std::vector<PlotPoint>>& plots) {
  std::ofstream out(path);
  out << "series,x,y,error\n";
  for (const auto& [series, points] : plots)
    for (const PlotPoint& p : points)
      out << csv_field(series) << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
          << format_double(p.error) << '\n';
}

void write_plot_svg(const fs::path& path, const std::map<std::string, std::vector<PlotPoint>>& plots) {
  constexpr double width = 520, height = 320, margin = 56;
  std::ofstream out(path);
  const double total = std::max<double>(1.0, static_cast<double>(plots.size())) * height;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << total
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  double top = 0.0;
  for (const auto& [series, points] : plots) {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const PlotPoint& p : points) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y - p.error);
      y1 = std::max(y1, p.y + p.error);
    }
    if (x1 <= x0) x1 = x0 + 1.0;
    if (y1 <= y0) y1 = y0 + 1.0;
    auto sx = [&](double x) { return margin + (x - x0) / (x1 - x0) * (width - 2 * margin); };
    auto sy = [&](double y) { return top + height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin); };
    out << "<text x=\"" << margin << "\" y=\"" << top + 20 << "\">" << series << "</text>\n";
    out << "<rect x=\"" << margin << "\" y=\"" << top + margin << "\" width=\"" << width - 2 * margin
        << "\" height=\"" << height - 2 * margin << "\" fill=\"none\" stroke=\"#888\"/>\n";
    out << "<text x=\"" << margin << "\" y=\"" << top + height - margin + 16 << "\">"
        << format_double(x0) << "</text><text x=\"" << width - margin - 40 << "\" y=\""
        << top + height - margin + 16 << "\">" << format_double(x1) << "</text>\n";
    out << "<text x=\"4\" y=\"" << top + height - margin << "\">" << format_double(y0)
        << "</text><text x=\"4\" y=\"" << top + margin + 4 << "\">" << format_double(y1)
        << "</text>\n<polyline fill=\"none\" stroke=\"#1f77b4\" points=\"";
    for (const PlotPoint& p : points) out << sx(p.x) << ',' << sy(p.y) << ' ';
    out << "\"/>\n";
    for (const PlotPoint& p : points) {
      out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"3\" fill=\"#1f77b4\"/>";
      if (p.error > 0.0)
        out << "<line x1=\"" << sx(p.x) << "\" x2=\"" << sx(p.x) << "\" y1=\"" << sy(p.y - p.error)
            << "\" y2=\"" << sy(p.y + p.error) << "\" stroke=\"#1f77b4\"/>";
      out << '\n';
    }
    top += height;
  }
  out << "</svg>\n";
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

// ---------------------------------------------------------------- public API

const std::vector<KindInfo>& experiment_kinds() {
  static const std::vector<KindInfo> kinds = {
      {"verify-identities", "random-current identities and inequality suite on the random corpus",
       {}, false},
      {"verify-switching", "switching identity on corpus graphs with sub-graphs", {}, false},
      {"verify-pfaffian", "boundary Pfaffian residuals on free planar grids", {}, false},
      {"gs-match", "tune block spin variables to a quartic target measure", {}, false},
      {"mc-run", "Wolff or worm run on a lattice or graph file",
       {"graph", "betas", "seeds"}, true},
      {"scan-rl", "renormalized coupling R_L over lattice sizes", {"d", "sizes", "beta", "seeds"},
       true},
      {"locate-betac", "Binder-crossing estimate of the critical coupling",
       {"d", "sizes", "beta_lo", "beta_hi", "seeds"}, true},
      {"s2-diagnostics", "two-point decay exponent, dyadic scaling classes and bubble diagram",
       {"d", "L", "beta", "seeds"}, true},
      {"intersection-scan", "four-replica cluster intersection statistics over lattice sizes",
       {"d", "sizes", "beta", "seeds"}, true},
      {"emergent-planarity",
       "boundary Pfaffian residual versus point separation on a next-nearest-neighbor strip",
       {"beta", "seeds"}, true},
  };
  return kinds;
}

const KindInfo& kind_info(const std::string& name) {
  for (const KindInfo& k : experiment_kinds())
    if (k.name == name) return k;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_experiment(const std::string& kind, const std::string& toml_text,
                                  const Overrides& overrides) {
  kind_info(kind);
  Parsed parsed = parse_and_plan(kind, toml_text, overrides);

  ExperimentConfig cfg;
  cfg.kind = kind;
  if (auto b = parsed.table.get("budget")) {
    auto v = b->as_floating_point() ? b->as_floating_point()->get()
             : b->as_integer()      ? static_cast<double>(b->as_integer()->get())
                                    : -1.0;
    if (!(v > 0.0)) throw ConfigError("'budget' must be a positive number of seconds");
    cfg.budget_seconds = v;
  }
  // Output location: override, then config, then environment, then ./results.
  const toml::table original = [&] {
    try {
      return toml::parse(toml_text);
    } catch (const toml::parse_error&) {
      return toml::table{};
    }
  }();
  if (overrides.out) {
    cfg.output_root = *overrides.out;
  } else if (auto o = original.get("out")) {
    if (!o->as_string()) throw ConfigError("'out' must be a string");
    cfg.output_root = o->as_string()->get();
  } else if (const char* env = std::getenv(kOutputEnvVar); env && *env) {
    cfg.output_root = env;
  } else {
    cfg.output_root = "results";
  }

  std::ostringstream effective;
  effective << parsed.table << '\n';
  cfg.toml_text = effective.str();

  Json canonical = to_json(parsed.table, "");
  canonical.erase("budget");
  canonical.erase("svg");
  canonical["kind"] = kind;
  // A graph file enters the hash by content, not only by path.
  if (canonical.contains("graph") && canonical["graph"].contains("file")) {
    std::ifstream in(canonical["graph"]["file"].get<std::string>(), std::ios::binary);
    std::stringstream content;
    content << in.rdbuf();
    canonical["graph_file_fnv1a"] = fnv1a_hex(content.str());
  }
  cfg.canonical = canonical.dump();
  cfg.input_hash = fnv1a_hex(cfg.canonical + "\n" + kSoftwareVersion);
  cfg.experiment_id = kind + "-" + cfg.input_hash.substr(0, 12);
  return cfg;
}

std::string csv_header() { return "experiment_id,kind,observable,value,error,L,beta,seed,input_hash"; }

std::string csv_row(const ResultRecord& r) {
  std::string row = csv_field(r.experiment_id) + ',' + csv_field(r.kind) + ',' +
                    csv_field(r.observable) + ',' + format_double(r.value) + ',' +
                    format_double(r.error) + ',';
  if (r.L) row += std::to_string(*r.L);
  row += ',';
  if (r.beta) row += format_double(*r.beta);
  row += ',';
  if (r.seed) row += std::to_string(*r.seed);
  row += ',' + r.input_hash;
  return row;
}

RunOutcome run_experiment(const ExperimentConfig& config) {
  Parsed parsed = parse_and_plan(config.kind, config.toml_text, {});
  const bool svg = parsed.table.get("svg") && parsed.table.get("svg")->as_boolean() &&
                   parsed.table.get("svg")->as_boolean()->get();

  RunOutcome outcome;
  outcome.directory = config.output_root / config.experiment_id;
  fs::create_directories(outcome.directory);
  for (const char* stale : {"FAILED", "results.csv", "summary.json", "plot.csv", "plot.svg"})
    fs::remove(outcome.directory / stale);
  {
    std::ofstream(outcome.directory / "config.toml") << config.toml_text;
  }

  RunContext ctx(config, outcome.directory);
  std::string status = "ok";
  try {
    parsed.runner(ctx);
  } catch (const std::exception& e) {
    status = "failed";
    outcome.message = e.what();
    outcome.exit_code = 1;
    std::ofstream(outcome.directory / "FAILED") << e.what() << '\n';
  }
  outcome.records = ctx.records();
  outcome.verification_passed = ctx.verification_passed;
  if (ctx.is_verification && !ctx.verification_passed && outcome.exit_code == 0) {
    outcome.exit_code = 1;
    outcome.message = "verification failed";
  }

  Json summary = ctx.summary();
  summary["experiment_id"] = config.experiment_id;
  summary["kind"] = config.kind;
  summary["status"] = status;
  if (ctx.is_verification) summary["passed"] = ctx.verification_passed && status == "ok";
  if (!outcome.message.empty()) summary["message"] = outcome.message;
  std::ofstream(outcome.directory / "summary.json") << summary.dump(2) << '\n';

  write_plot_csv(outcome.directory / "plot.csv", ctx.plots());
  if (svg && !ctx.plots().empty()) write_plot_svg(outcome.directory / "plot.svg", ctx.plots());

  Json manifest;
  manifest["experiment_id"] = config.experiment_id;
  manifest["kind"] = config.kind;
  manifest["input_hash"] = config.input_hash;
  manifest["software_version"] = kSoftwareVersion;
  manifest["config"] = Json::parse(config.canonical);
  manifest["records"] = outcome.records;
  manifest["status"] = status;
  manifest["metadata"] = ctx.metadata();
  manifest["wall_seconds"] = ctx.elapsed();
  std::ofstream(outcome.directory / "manifest.json") << manifest.dump(2) << '\n';
  return outcome;
}

ReplayReport replay_experiment(const fs::path& directory) {
  ReplayReport report;
  const fs::path manifest_path = directory / "manifest.json";
  const fs::path config_path = directory / "config.toml";
  if (!fs::exists(manifest_path) || !fs::exists(config_path) ||
      !fs::exists(directory / "results.csv"))
    throw ConfigError("replay: " + directory.string() +
                      " lacks manifest.json, config.toml or results.csv");
  Json manifest;
  try {
    manifest = Json::parse(std::ifstream(manifest_path));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("replay: manifest.json: ") + e.what());
  }
  const std::string kind = manifest.at("kind").get<std::string>();
  std::ifstream in(config_path);
  std::stringstream text;
  text << in.rdbuf();

  std::string scratch_template = (fs::temp_directory_path() / "rcising-replay-XXXXXX").string();
  if (!mkdtemp(scratch_template.data())) throw std::runtime_error("replay: cannot create scratch dir");
  const fs::path scratch = scratch_template;

  Overrides o;
  o.out = scratch;
  ExperimentConfig cfg = parse_experiment(kind, text.str(), o);
  const RunOutcome rerun = run_experiment(cfg);

  const auto stored = read_lines(directory / "results.csv");
  const auto fresh = read_lines(rerun.directory / "results.csv");
  fs::remove_all(scratch);

  const std::size_t common = std::min(stored.size(), fresh.size());
  for (std::size_t i = 0; i < common; ++i) {
    if (stored[i] != fresh[i]) {
      report.compared = i;
      report.message = "first divergent record at line " + std::to_string(i + 1) +
                       ":\n  stored: " + stored[i] + "\n  replay: " + fresh[i];
      return report;
    }
  }
  report.compared = common;
  if (stored.size() != fresh.size()) {
    report.message = "record count differs: stored " + std::to_string(stored.size()) +
                     " lines, replay " + std::to_string(fresh.size()) + " lines";
    return report;
  }
  if (cfg.experiment_id != manifest.at("experiment_id").get<std::string>()) {
    report.message = "experiment id differs from the manifest";
    return report;
  }
  report.identical = true;
  report.message = "identical (" + std::to_string(common > 0 ? common - 1 : 0) + " records)";
  return report;
}

}  // namespace rcising
