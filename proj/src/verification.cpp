#include "rcising/verification.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "rcising/currents.hpp"
#include "rcising/diagrams.hpp"
#include "rcising/ising_exact.hpp"
#include "rcising/pfaffian.hpp"
#include "rcising/rng.hpp"

namespace rcising {

namespace {

/// Uniform in the open interval (0, 1).
double open_unit(CounterRng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// k distinct vertices in random order.
std::vector<Vertex> distinct_points(CounterRng& rng, std::size_t n, std::size_t k) {
  std::vector<Vertex> all(n);
  std::iota(all.begin(), all.end(), Vertex{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(all[i], all[j]);
  }
  all.resize(k);
  return all;
}

std::vector<Vertex> any_points(CounterRng& rng, std::size_t n, std::size_t k) {
  std::vector<Vertex> out(k);
  for (auto& v : out) v = static_cast<Vertex>(rng.below(n));
  return out;
}

double pair_probability(const CouplingGraph& graph, double beta, std::vector<Vertex> a,
                        std::vector<Vertex> b, const std::function<bool(Trace)>& event) {
  ReplicaQuery query;
  query.replicas = {Replica{std::move(a), kAllEdges}, Replica{std::move(b), kAllEdges}};
  query.groups = {{0, 1}};
  return replica_expectation(graph, beta, query, [&](std::span<const Trace> traces) {
    return event(traces[0]) ? 1.0 : 0.0;
  });
}

constexpr std::uint64_t kPointStream = 1'000'000;

}  // namespace

CorpusInstance corpus_instance(const CorpusOptions& options, std::size_t index) {
  if (options.min_vertices < 2 || options.max_vertices < options.min_vertices)
    throw std::invalid_argument("corpus: invalid vertex range");
  CounterRng rng(options.seed, index);
  const std::size_t n =
      options.min_vertices + rng.below(options.max_vertices - options.min_vertices + 1);
  const std::size_t max_pairs = n * (n - 1) / 2;
  const std::size_t edge_cap = std::min(max_pairs, options.max_edges);
  if (edge_cap + 1 < n) throw std::invalid_argument("corpus: edge cap too small for connectivity");
  const std::size_t target = (n - 1) + rng.below(edge_cap - (n - 1) + 1);

  // Random spanning tree (each new vertex attaches to an earlier one), then extra pairs.
  std::vector<Vertex> order = distinct_points(rng, n, n);
  std::set<std::pair<Vertex, Vertex>> pairs;
  for (std::size_t i = 1; i < n; ++i) {
    const Vertex a = order[i], b = order[rng.below(i)];
    pairs.insert({std::min(a, b), std::max(a, b)});
  }
  while (pairs.size() < target) {
    const auto p = distinct_points(rng, n, 2);
    pairs.insert({std::min(p[0], p[1]), std::max(p[0], p[1])});
  }
  std::vector<Edge> edges;
  for (const auto& [a, b] : pairs) edges.push_back({a, b, options.max_coupling * open_unit(rng)});
  CorpusInstance out;
  out.index = index;
  out.graph = CouplingGraph(n, std::move(edges));
  out.beta = options.max_beta * open_unit(rng);
  return out;
}

std::vector<CorpusInstance> random_corpus(const CorpusOptions& options) {
  std::vector<CorpusInstance> out;
  out.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) out.push_back(corpus_instance(options, i));
  return out;
}

std::size_t SuiteReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.passed; }));
}

std::map<std::string, double> SuiteReport::worst() const {
  std::map<std::string, double> out;
  for (const Check& c : checks) {
    auto [it, inserted] = out.emplace(c.name, c.residual);
    if (!inserted) it->second = std::max(it->second, c.residual);
  }
  return out;
}

double SuiteReport::worst_overall() const {
  double w = 0.0;
  for (const Check& c : checks) w = std::max(w, c.residual);
  return w;
}

double relative_residual(double lhs, double rhs, double scale) {
  const double denom = std::max({std::abs(lhs), std::abs(rhs), std::abs(scale)});
  if (denom == 0.0) return 0.0;
  return std::abs(lhs - rhs) / denom;
}

Check equality_check(std::string name, std::size_t instance, double lhs, double rhs,
                     double tolerance, double scale) {
  Check c{std::move(name), instance, lhs, rhs, relative_residual(lhs, rhs, scale), false};
  c.passed = std::isfinite(c.residual) && c.residual <= tolerance;
  return c;
}

Check inequality_check(std::string name, std::size_t instance, double lhs, double rhs,
                       double tolerance, double scale) {
  const double denom = std::max({std::abs(lhs), std::abs(rhs), std::abs(scale)});
  Check c{std::move(name), instance, lhs, rhs, 0.0, false};
  if (lhs > rhs) c.residual = denom > 0.0 ? (lhs - rhs) / denom : 0.0;
  c.passed = std::isfinite(lhs) && std::isfinite(rhs) && c.residual <= tolerance;
  return c;
}

SuiteReport identity_suite(const std::vector<CorpusInstance>& corpus, double tolerance) {
  SuiteReport report;
  report.suite = "identities";
  for (const CorpusInstance& inst : corpus) {
    const CouplingGraph& g = inst.graph;
    const double beta = inst.beta;
    const std::size_t n = g.num_vertices();
    const std::size_t id = inst.index;
    CounterRng rng(id, kPointStream);
    const GibbsTable table(g, ThermoParams{beta, 0.0});
    auto add = [&](Check c) { report.checks.push_back(std::move(c)); };

    const double z_empty = constrained_sum(g, beta, {});
    add(equality_check("partition", id, std::ldexp(z_empty, static_cast<int>(n)),
                       partition_function(g, ThermoParams{beta, 0.0}), tolerance));

    const auto pair = distinct_points(rng, n, 2);
    add(equality_check("source_insertion_2", id, constrained_sum(g, beta, pair) / z_empty,
                       table.correlation(pair), tolerance));
    if (n >= 4) {
      const auto quad = distinct_points(rng, n, 4);
      add(equality_check("source_insertion_4", id, constrained_sum(g, beta, quad) / z_empty,
                         table.correlation(quad), tolerance));
    }

    {
      const Vertex x = pair[0], y = pair[1];
      const double s = table.s2(x, y);
      const double p = pair_probability(g, beta, {}, {},
                                        [&](Trace t) { return connected(g, t.support, x, y); });
      add(equality_check("percolation", id, s * s, p, tolerance));
    }

    if (n >= 3) {
      const auto p3 = distinct_points(rng, n, 3);
      const Vertex x = p3[0], y = p3[1], z = p3[2];
      const double lhs = table.s2(x, y) * table.s2(y, z) / table.s2(x, z);
      const double rhs = pair_probability(g, beta, {x, z}, {},
                                          [&](Trace t) { return connected(g, t.support, x, y); });
      add(equality_check("hitting", id, lhs, rhs, tolerance));
    }

    if (n >= 4) {
      const auto p4 = distinct_points(rng, n, 4);
      const Vertex x = p4[0], y = p4[1], u = p4[2], v = p4[3];
      const std::array<Vertex, 4> all{x, y, u, v};
      const double s4 = table.correlation(all);
      const double lhs = s4 - table.s2(x, y) * table.s2(u, v);
      auto apart = [&](Trace t) { return !connected(g, t.support, u, v); };
      const double rhs =
          table.s2(x, u) * table.s2(y, v) * pair_probability(g, beta, {x, u}, {y, v}, apart) +
          table.s2(x, v) * table.s2(y, u) * pair_probability(g, beta, {x, v}, {y, u}, apart);
      add(equality_check("truncated", id, lhs, rhs, tolerance,
                         std::max(s4, table.s2(x, y) * table.s2(u, v))));

      const auto q = distinct_points(rng, n, 4);
      const double u4 = table.ursell4(q[0], q[1], q[2], q[3]);
      const double s4q = table.correlation(q);
      const double p_all = pair_probability(g, beta, q, {}, [&](Trace t) {
        return interconnected(g, t.support, q);
      });
      const double line1 = -2.0 * s4q * p_all;
      const double p_link = pair_probability(g, beta, {q[0], q[1]}, {q[2], q[3]}, [&](Trace t) {
        return connected(g, t.support, q[0], q[2]);
      });
      const double line2 = -2.0 * table.s2(q[0], q[1]) * table.s2(q[2], q[3]) * p_link;
      add(equality_check("ursell_line1", id, u4, line1, tolerance, s4q));
      add(equality_check("ursell_line2", id, u4, line2, tolerance, s4q));
      add(equality_check("ursell_lines_agree", id, line1, line2, tolerance, s4q));
    }
    ++report.instances;
  }
  return report;
}

SuiteReport switching_suite(const std::vector<CorpusInstance>& corpus, double tolerance) {
  SuiteReport report;
  report.suite = "switching";
  for (const CorpusInstance& inst : corpus) {
    const CouplingGraph& g = inst.graph;
    const std::size_t n = g.num_vertices();
    const std::size_t m = g.num_edges();
    CounterRng rng(inst.index, kPointStream + 1);

    auto random_sources = [&]() {
      const std::size_t sizes[] = {0, 2, 4};
      std::size_t k = sizes[rng.below(3)];
      while (k > n) k -= 2;
      auto pts = distinct_points(rng, n, k);
      std::sort(pts.begin(), pts.end());
      return pts;
    };
    const auto A = random_sources();
    const auto B = random_sources();

    EdgeMask sub = (m == 64) ? kAllEdges : ((EdgeMask{1} << m) - 1);
    bool proper = false;
    if (inst.index % 3 != 0 && m >= 1) {
      // Drop at least one edge, keep each other edge with probability 1/2.
      const std::size_t forced = rng.below(m);
      for (std::size_t e = 0; e < m; ++e)
        if (e == forced || rng.bernoulli(0.5)) sub &= ~(EdgeMask{1} << e);
      proper = true;
    }

    std::function<double(Trace)> F;
    std::string label;
    if (inst.index % 2 == 0) {
      F = [](Trace) { return 1.0; };
      label = "F=1";
    } else {
      const auto xy = distinct_points(rng, n, 2);
      F = [&g, xy](Trace t) { return connected(g, t.support, xy[0], xy[1]) ? 1.0 : 0.0; };
      label = "F=connectivity";
    }
    const SwitchingResult r = switching_check(g, sub, inst.beta, A, B, F);
    report.checks.push_back(equality_check(
        std::string("switching ") + (proper ? "G2<G1 " : "G2=G1 ") + label, inst.index, r.lhs,
        r.rhs, tolerance));
    ++report.instances;
  }
  return report;
}

namespace {

/// Ursell function and two-point table of the block fields of a decorated graph.
struct BlockFieldTable {
  std::size_t base_vertices = 0;
  std::size_t block = 0;
  double scale = 0.0;  // alpha / sqrt(N)
  GibbsTable gibbs;

  double s2(Vertex x, Vertex y) const {
    double s = 0.0;
    for (std::size_t i = 0; i < block; ++i)
      for (std::size_t j = 0; j < block; ++j)
        s += gibbs.s2(static_cast<Vertex>(x * block + i), static_cast<Vertex>(y * block + j));
    return scale * scale * s;
  }
  double ursell4(const std::array<Vertex, 4>& x) const {
    double s = 0.0;
    const std::size_t total = block * block * block * block;
    for (std::size_t c = 0; c < total; ++c) {
      std::size_t rest = c;
      std::array<Vertex, 4> site{};
      for (int k = 0; k < 4; ++k) {
        site[static_cast<std::size_t>(k)] =
            static_cast<Vertex>(x[static_cast<std::size_t>(k)] * block + rest % block);
        rest /= block;
      }
      s += gibbs.ursell4(site[0], site[1], site[2], site[3]);
    }
    return std::pow(scale, 4) * s;
  }
};

}  // namespace

SuiteReport inequality_suite(const std::vector<CorpusInstance>& corpus, double tolerance) {
  SuiteReport report;
  report.suite = "inequalities";
  for (const CorpusInstance& inst : corpus) {
    const CouplingGraph& g = inst.graph;
    const double beta = inst.beta;
    const std::size_t n = g.num_vertices();
    const std::size_t id = inst.index;
    CounterRng rng(id, kPointStream + 2);
    const GibbsTable table(g, ThermoParams{beta, 0.0});
    const S2Table s2 = S2Table::from_gibbs(table);
    auto add = [&](Check c) { report.checks.push_back(std::move(c)); };

    // U4 sign on random (possibly coincident) quadruples.
    for (int rep = 0; rep < 4; ++rep) {
      const auto q = any_points(rng, n, 4);
      add(inequality_check("ursell_sign", id, table.ursell4(q[0], q[1], q[2], q[3]), 0.0,
                           tolerance, table.correlation(q)));
    }
    {
      const std::vector<double> ones(n, 1.0);
      const auto m = table.linear_moments(ones, 4);
      const double r = r_ratio_from_block(m[2], m[4]);
      add(inequality_check("R_lower", id, 0.0, r, tolerance, 1.0));
      add(inequality_check("R_upper", id, r, 2.0, tolerance, 2.0));
    }

    if (n >= 4) {
      const auto q = distinct_points(rng, n, 4);
      const std::array<Vertex, 4> x{q[0], q[1], q[2], q[3]};
      const double u4 = std::abs(table.ursell4(x[0], x[1], x[2], x[3]));
      const double s4 = table.correlation(q);
      const auto law = exact_intersection(g, beta, x[0], x[1], x[2], x[3]);
      add(inequality_check("four_replica", id, u4,
                           2.0 * table.s2(x[0], x[1]) * table.s2(x[2], x[3]) * law.p_nonempty,
                           tolerance, s4));
      add(inequality_check("tree", id, u4, tree_rhs(s2, x), tolerance, s4));
      add(inequality_check("tree_balanced", id, u4, tree_rhs_balanced(s2, g, beta, x), tolerance,
                           s4));
      const WickGap w4 = wick_gap_check(table, q, tolerance);
      add(inequality_check("wick_gap_4_lower", id, 0.0, w4.gap, tolerance, s4));
      add(inequality_check("wick_gap_4_upper", id, w4.gap, w4.bound, tolerance, s4));
    }
    {
      const auto six = n >= 6 ? distinct_points(rng, n, 6) : any_points(rng, n, 6);
      const WickGap w6 = wick_gap_check(table, six, tolerance);
      const double s6 = std::max(std::abs(table.correlation(six)), wick_functional(s2, six));
      add(inequality_check("wick_gap_6_lower", id, 0.0, w6.gap, tolerance, s6));
      add(inequality_check("wick_gap_6_upper", id, w6.gap, w6.bound, tolerance, s6));
    }

    if (n >= 3) {
      const auto xz = distinct_points(rng, n, 2);
      const Vertex x = xz[0], z = xz[1];
      std::vector<Vertex> box;
      for (Vertex v = 0; v < n; ++v)
        if (v != x && v != z && rng.bernoulli(0.5)) box.push_back(v);
      if (box.empty()) {
        for (Vertex v = 0; v < n; ++v)
          if (v != x && v != z) {
            box.push_back(v);
            break;
          }
      }
      std::vector<std::uint8_t> in_box(n, 0);
      for (Vertex v : box) in_box[v] = 1;
      const double hit = pair_probability(g, beta, {x, z}, {}, [&](Trace t) {
        for (Vertex v : cluster(g, t.support, x))
          if (in_box[v]) return true;
        return false;
      });
      const double lhs = table.s2(x, z) * hit;
      double rhs = 0.0;
      for (const Edge& e : g.edges()) {
        if (in_box[e.u] == in_box[e.v]) continue;
        const Vertex u = in_box[e.u] ? e.u : e.v;
        const Vertex v = in_box[e.u] ? e.v : e.u;
        rhs += table.s2(x, u) * beta * e.J * table.s2(v, z);
      }
      add(inequality_check("box_hitting", id, lhs, rhs, tolerance, table.s2(x, z)));
    }

    {
      std::vector<double> f(n);
      for (double& v : f) v = 2.0 * rng.uniform() - 1.0;
      std::vector<Vertex> block(n);
      std::iota(block.begin(), block.end(), Vertex{0});
      std::vector<double> z_grid;
      for (int k = -8; k <= 8; ++k) z_grid.push_back(0.25 * k);
      const MgfGap gap = mgf_gap_check_exact(table, f, block, z_grid);
      double scale = 0.0;
      for (std::size_t k = 0; k < gap.z.size(); ++k) scale = std::max(scale, gap.rhs[k]);
      add(inequality_check("mgf_gap", id, gap.max_violation, 0.0, tolerance, std::max(scale, 1.0)));
    }

    if (n >= 4 && n <= 5) {
      // Block fields of a two-site decoration of the instance.
      const double alpha = 0.5 + open_unit(rng);
      const double g_intra = open_unit(rng);
      const CouplingGraph decorated = build_decorated(g, 2, alpha, g_intra);
      BlockFieldTable fields{n, 2, alpha / std::sqrt(2.0),
                             GibbsTable(decorated, ThermoParams{beta, 0.0})};
      std::vector<double> matrix(n * n);
      for (Vertex a = 0; a < n; ++a)
        for (Vertex b = 0; b < n; ++b) matrix[a * n + b] = fields.s2(a, b);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) matrix[b * n + a] = matrix[a * n + b];
      const S2Table phi = S2Table::dense(n, std::move(matrix));
      const auto q = distinct_points(rng, n, 4);
      const std::array<Vertex, 4> x{q[0], q[1], q[2], q[3]};
      const double u4 = std::abs(fields.ursell4(x));
      const double ref = phi(x[0], x[1]) * phi(x[2], x[3]);
      add(inequality_check("tree_balanced_decorated", id, u4, tree_rhs_balanced(phi, g, beta, x),
                           tolerance, ref));
    }
    ++report.instances;
  }
  return report;
}

CouplingGraph free_grid(int rows, int cols, double J) {
  if (rows < 2 || cols < 2) throw GraphError("free grid needs at least 2 x 2 sites");
  auto at = [cols](int r, int c) { return static_cast<Vertex>(r * cols + c); };
  std::vector<Edge> edges;
  std::vector<std::vector<int>> embedding;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      embedding.push_back({r, c});
      if (c + 1 < cols) edges.push_back({at(r, c), at(r, c + 1), J});
      if (r + 1 < rows) edges.push_back({at(r, c), at(r + 1, c), J});
    }
  std::vector<Vertex> face;
  for (int c = 0; c < cols; ++c) face.push_back(at(0, c));
  for (int r = 1; r < rows; ++r) face.push_back(at(r, cols - 1));
  for (int c = cols - 2; c >= 0; --c) face.push_back(at(rows - 1, c));
  for (int r = rows - 2; r >= 1; --r) face.push_back(at(r, 0));
  return CouplingGraph(static_cast<std::size_t>(rows * cols), std::move(edges),
                       std::move(embedding), std::move(face));
}

SuiteReport pfaffian_suite(const PfaffianSuiteOptions& options) {
  SuiteReport report;
  report.suite = "pfaffian";
  std::size_t case_index = 0;
  for (const auto& [rows, cols] : options.grids) {
    const CouplingGraph g = free_grid(rows, cols);
    const auto face = g.boundary_face();
    for (double beta : options.betas) {
      const GibbsTable table(g, ThermoParams{beta, 0.0});
      for (std::size_t k : options.point_counts) {
        if (k > face.size()) continue;
        CounterRng rng(options.seed, case_index++);
        for (std::size_t rep = 0; rep < options.subsets_per_case; ++rep) {
          const auto idx = distinct_points(rng, face.size(), k);
          std::vector<Vertex> pts;
          for (Vertex i : idx) pts.push_back(face[i]);
          const BoundaryPfaffian bp = boundary_pfaffian(g, beta, pts);
          Check c = equality_check("boundary_pfaffian_" + std::to_string(k), report.instances,
                                   bp.correlation, bp.pfaffian, options.tolerance);
          c.residual = bp.residual;
          c.passed = bp.residual <= options.tolerance;
          report.checks.push_back(std::move(c));
          if (k == 4) {
            const auto& o = bp.ordered_points;
            const double u4 = table.ursell4(o[0], o[1], o[2], o[3]);
            report.checks.push_back(equality_check("planar_ursell", report.instances, u4,
                                                   -2.0 * table.s2(o[0], o[2]) *
                                                       table.s2(o[1], o[3]),
                                                   options.tolerance, table.correlation(o)));
          }
        }
        ++report.instances;
      }
    }
  }
  // Six points on a circle paired (0,3), (1,5), (2,4): exactly two crossings.
  const std::vector<double> positions{0, 1, 2, 3, 4, 5};
  const Pairing example{{3, 5, 4, 0, 2, 1}};
  Check sign = equality_check("crossing_sign_two_crossings", report.instances,
                              crossing_sign(positions, example), 1.0, 0.0);
  report.checks.push_back(sign);
  return report;
}

}  // namespace rcising
