#include "rcising/currents.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>
#include <unordered_map>

#include "rcising/union_find.hpp"

namespace rcising {

namespace {

void require_trace_capacity(const CouplingGraph& graph) {
  if (graph.num_edges() > kMaxTraceEdges)
    throw CapExceeded("traces support at most 64 edges, graph has " +
                      std::to_string(graph.num_edges()));
}

EdgeMask valid_edges(const CouplingGraph& graph, EdgeMask edges) {
  const std::size_t m = graph.num_edges();
  const EdgeMask all = m >= 64 ? kAllEdges : ((EdgeMask{1} << m) - 1);
  return edges & all;
}

std::vector<std::uint8_t> source_parity(const CouplingGraph& graph, std::span<const Vertex> A) {
  std::vector<std::uint8_t> parity(graph.num_vertices(), 0);
  for (Vertex v : A) {
    if (v >= graph.num_vertices())
      throw std::out_of_range("source vertex " + std::to_string(v) + " out of range");
    parity[v] ^= 1u;
  }
  return parity;
}

/// Positions of the set bits of `mask`, ascending.
std::vector<std::uint32_t> bit_positions(EdgeMask mask) {
  std::vector<std::uint32_t> out;
  while (mask) {
    out.push_back(static_cast<std::uint32_t>(std::countr_zero(mask)));
    mask &= mask - 1;
  }
  return out;
}

/// Depth-first enumeration of odd edge sets O with boundary A, then of the
/// EvenPos subsets of the remaining edges.
class SectorEnumerator {
 public:
  SectorEnumerator(const CouplingGraph& graph, double beta, std::span<const Vertex> A,
                   EdgeMask edges)
      : graph_(graph), target_(source_parity(graph, A)), parity_(graph.num_vertices(), 0) {
    active_ = bit_positions(valid_edges(graph, edges));
    const std::size_t m = active_.size();
    odd_w_.resize(m);
    even_w_.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double x = beta * graph.edge(active_[j]).J;
      odd_w_[j] = std::sinh(x);
      even_w_[j] = reduced_weight(ReducedState::EvenPos, x);
    }
    last_.assign(graph.num_vertices(), -1);
    for (std::size_t j = 0; j < m; ++j) {
      const Edge& e = graph.edge(active_[j]);
      last_[e.u] = static_cast<int>(j);
      last_[e.v] = static_cast<int>(j);
    }
    feasible_ = true;
    for (std::size_t v = 0; v < target_.size(); ++v)
      if (target_[v] && last_[v] < 0) feasible_ = false;
  }

  std::size_t num_active() const { return active_.size(); }
  std::span<const std::uint32_t> active() const { return active_; }

  /// visit(local_support, local_odd, weight) for every nonzero reduced configuration.
  template <class Visit>
  void run(Visit&& visit) {
    if (!feasible_) return;
    odd_dfs(0, 0, 1.0, visit);
  }

 private:
  template <class Visit>
  void odd_dfs(std::size_t j, std::uint64_t odd, double w, Visit& visit) {
    if (j == active_.size()) {
      even_dfs(0, odd, odd, w, visit);
      return;
    }
    const Edge& e = graph_.edge(active_[j]);
    for (int choice = 0; choice < 2; ++choice) {
      double wj = w;
      if (choice == 1) {
        if (odd_w_[j] == 0.0) continue;
        wj *= odd_w_[j];
        parity_[e.u] ^= 1u;
        parity_[e.v] ^= 1u;
      }
      const bool ok = (last_[e.u] != static_cast<int>(j) || parity_[e.u] == target_[e.u]) &&
                      (last_[e.v] != static_cast<int>(j) || parity_[e.v] == target_[e.v]);
      if (ok) odd_dfs(j + 1, choice ? (odd | (std::uint64_t{1} << j)) : odd, wj, visit);
      if (choice == 1) {
        parity_[e.u] ^= 1u;
        parity_[e.v] ^= 1u;
      }
    }
  }

  template <class Visit>
  void even_dfs(std::size_t j, std::uint64_t support, std::uint64_t odd, double w, Visit& visit) {
    while (j < active_.size() && (odd >> j) & 1u) ++j;
    if (j == active_.size()) {
      visit(support, odd, w);
      return;
    }
    even_dfs(j + 1, support, odd, w, visit);
    if (even_w_[j] != 0.0)
      even_dfs(j + 1, support | (std::uint64_t{1} << j), odd, w * even_w_[j], visit);
  }

  const CouplingGraph& graph_;
  std::vector<std::uint8_t> target_;
  std::vector<std::uint8_t> parity_;
  std::vector<std::uint32_t> active_;
  std::vector<double> odd_w_;
  std::vector<double> even_w_;
  std::vector<int> last_;
  bool feasible_ = true;
};

EdgeMask expand(std::uint64_t local, std::span<const std::uint32_t> positions) {
  EdgeMask out = 0;
  while (local) {
    const int b = std::countr_zero(local);
    out |= EdgeMask{1} << positions[b];
    local &= local - 1;
  }
  return out;
}

std::uint64_t compress(EdgeMask global, std::span<const std::uint32_t> positions) {
  std::uint64_t out = 0;
  for (std::size_t i = 0; i < positions.size(); ++i)
    if ((global >> positions[i]) & 1u) out |= std::uint64_t{1} << i;
  return out;
}

struct TraceHash {
  std::size_t operator()(const Trace& t) const {
    std::uint64_t h = t.support * 0x9E3779B97F4A7C15ull;
    h ^= t.odd + 0x632BE59BD9B4E019ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

/// Largest union of edges for which group tables use a dense support array.
constexpr std::size_t kDenseGroupEdges = 24;

/// Table of the trace of a sum of independent replicas, weights normalized.
SectorTable convolve_group(const std::vector<const SectorTable*>& members, bool needs_parity) {
  EdgeMask union_support = 0;
  for (const SectorTable* t : members)
    for (const auto& e : t->entries) union_support |= e.trace.support;
  const auto positions = bit_positions(union_support);

  SectorTable acc;
  acc.entries.push_back({Trace{}, 1.0});
  acc.total = 1.0;
  for (const SectorTable* t : members) {
    SectorTable next;
    if (!needs_parity && positions.size() <= kDenseGroupEdges) {
      std::vector<double> dense(std::size_t{1} << positions.size(), 0.0);
      std::vector<std::uint64_t> lhs(acc.entries.size());
      std::vector<std::uint64_t> rhs(t->entries.size());
      for (std::size_t i = 0; i < lhs.size(); ++i)
        lhs[i] = compress(acc.entries[i].trace.support, positions);
      for (std::size_t i = 0; i < rhs.size(); ++i)
        rhs[i] = compress(t->entries[i].trace.support, positions);
      for (std::size_t a = 0; a < lhs.size(); ++a) {
        const double wa = acc.entries[a].weight;
        for (std::size_t b = 0; b < rhs.size(); ++b)
          dense[lhs[a] | rhs[b]] += wa * t->entries[b].weight;
      }
      for (std::size_t s = 0; s < dense.size(); ++s)
        if (dense[s] != 0.0) next.entries.push_back({Trace{expand(s, positions), 0}, dense[s]});
    } else {
      std::unordered_map<Trace, double, TraceHash> map;
      map.reserve(acc.entries.size() * t->entries.size());
      for (const auto& a : acc.entries)
        for (const auto& b : t->entries) {
          Trace sum = a.trace + b.trace;
          if (!needs_parity) sum.odd = 0;
          map[sum] += a.weight * b.weight;
        }
      next.entries.reserve(map.size());
      for (const auto& [trace, w] : map) next.entries.push_back({trace, w});
      std::sort(next.entries.begin(), next.entries.end(), [](const auto& x, const auto& y) {
        return x.trace.support != y.trace.support ? x.trace.support < y.trace.support
                                                  : x.trace.odd < y.trace.odd;
      });
    }
    KahanSum total;
    for (const auto& e : next.entries) total.add(e.weight);
    next.total = total.value();
    acc = std::move(next);
  }
  return acc;
}

}  // namespace

std::vector<Vertex> sources(const CouplingGraph& graph, const CurrentConfig& current) {
  if (current.occupation.size() != graph.num_edges())
    throw CurrentsError("current must assign an occupation to every edge");
  std::vector<std::uint8_t> parity(graph.num_vertices(), 0);
  for (std::size_t i = 0; i < graph.num_edges(); ++i) {
    if (current.occupation[i] & 1u) {
      parity[graph.edge(i).u] ^= 1u;
      parity[graph.edge(i).v] ^= 1u;
    }
  }
  std::vector<Vertex> out;
  for (std::size_t v = 0; v < parity.size(); ++v)
    if (parity[v]) out.push_back(static_cast<Vertex>(v));
  return out;
}

double weight(const CouplingGraph& graph, double beta, const CurrentConfig& current) {
  if (current.occupation.size() != graph.num_edges())
    throw CurrentsError("current must assign an occupation to every edge");
  double log_w = 0.0;
  for (std::size_t i = 0; i < graph.num_edges(); ++i) {
    const auto n = current.occupation[i];
    if (n == 0) continue;
    const double x = beta * graph.edge(i).J;
    if (x == 0.0) return 0.0;
    log_w += static_cast<double>(n) * std::log(x) - std::lgamma(static_cast<double>(n) + 1.0);
  }
  return std::exp(log_w);
}

double reduced_weight(ReducedState state, double beta_j) {
  switch (state) {
    case ReducedState::Zero:
      return 1.0;
    case ReducedState::EvenPos: {
      // cosh(x) - 1 without cancellation at small x.
      const double s = std::sinh(0.5 * beta_j);
      return 2.0 * s * s;
    }
    case ReducedState::Odd:
      return std::sinh(beta_j);
  }
  return 0.0;
}

SectorTable sector_table(const CouplingGraph& graph, double beta, std::span<const Vertex> A,
                         EdgeMask edges, bool keep_parity, std::size_t cap) {
  require_trace_capacity(graph);
  SectorEnumerator walker(graph, beta, A, edges);
  if (walker.num_active() > cap)
    throw CapExceeded("reduced enumeration cap exceeded: " + std::to_string(walker.num_active()) +
                      " edges > " + std::to_string(cap));
  const auto positions = walker.active();
  SectorTable table;
  if (keep_parity) {
    walker.run([&](std::uint64_t support, std::uint64_t odd, double w) {
      table.entries.push_back({Trace{expand(support, positions), expand(odd, positions)}, w});
    });
  } else {
    std::vector<double> dense(std::size_t{1} << walker.num_active(), 0.0);
    walker.run([&](std::uint64_t support, std::uint64_t, double w) { dense[support] += w; });
    for (std::size_t s = 0; s < dense.size(); ++s)
      if (dense[s] != 0.0) table.entries.push_back({Trace{expand(s, positions), 0}, dense[s]});
  }
  KahanSum total;
  for (const auto& e : table.entries) total.add(e.weight);
  table.total = total.value();
  return table;
}

double constrained_sum(const CouplingGraph& graph, double beta, std::span<const Vertex> A,
                       EdgeMask edges, std::size_t cap) {
  require_trace_capacity(graph);
  SectorEnumerator walker(graph, beta, A, edges);
  if (walker.num_active() > cap)
    throw CapExceeded("reduced enumeration cap exceeded: " + std::to_string(walker.num_active()) +
                      " edges > " + std::to_string(cap));
  KahanSum total;
  walker.run([&](std::uint64_t, std::uint64_t, double w) { total.add(w); });
  return total.value();
}

double replica_expectation(const CouplingGraph& graph, double beta, const ReplicaQuery& query,
                           const ReplicaEvent& event, std::size_t sector_cap, double term_cap) {
  const std::size_t k = query.replicas.size();
  std::vector<std::vector<std::size_t>> groups = query.groups;
  if (groups.empty())
    for (std::size_t r = 0; r < k; ++r) groups.push_back({r});
  std::vector<int> seen(k, 0);
  for (const auto& g : groups)
    for (std::size_t r : g) {
      if (r >= k) throw CurrentsError("replica group refers to a missing replica");
      ++seen[r];
    }
  for (int s : seen)
    if (s != 1) throw CurrentsError("every replica must belong to exactly one group");

  std::vector<SectorTable> tables;
  tables.reserve(k);
  for (const Replica& rep : query.replicas) {
    tables.push_back(
        sector_table(graph, beta, rep.sources, rep.edges, query.needs_parity, sector_cap));
    SectorTable& t = tables.back();
    if (!(t.total > 0.0)) throw CurrentsError("empty source-constrained sector");
    for (auto& e : t.entries) e.weight /= t.total;
    t.total = 1.0;
  }

  std::vector<SectorTable> group_tables;
  double terms = 1.0;
  for (const auto& g : groups) {
    std::vector<const SectorTable*> members;
    for (std::size_t r : g) members.push_back(&tables[r]);
    group_tables.push_back(convolve_group(members, query.needs_parity));
    terms *= static_cast<double>(group_tables.back().entries.size());
  }
  if (terms > term_cap)
    throw CapExceeded("replica expectation needs " + std::to_string(terms) + " terms");

  std::vector<Trace> traces(group_tables.size());
  KahanSum acc;
  auto recurse = [&](auto&& self, std::size_t level, double w) -> void {
    if (level == group_tables.size()) {
      const double value = event(traces);
      if (value != 0.0) acc.add(w * value);
      return;
    }
    for (const auto& e : group_tables[level].entries) {
      traces[level] = e.trace;
      self(self, level + 1, w * e.weight);
    }
  };
  recurse(recurse, 0, 1.0);
  return acc.value();
}

double replica_probability(const CouplingGraph& graph, double beta,
                           std::span<const std::vector<Vertex>> sources,
                           const ReplicaEvent& event) {
  ReplicaQuery query;
  for (const auto& s : sources) query.replicas.push_back({s, kAllEdges});
  return replica_expectation(graph, beta, query, event);
}

std::vector<Vertex> components(const CouplingGraph& graph, EdgeMask support) {
  UnionFind uf(graph.num_vertices());
  support = valid_edges(graph, support);
  while (support) {
    const Edge& e = graph.edge(static_cast<std::size_t>(std::countr_zero(support)));
    uf.unite(e.u, e.v);
    support &= support - 1;
  }
  std::vector<Vertex> root_min(graph.num_vertices(), 0);
  std::vector<std::uint8_t> set(graph.num_vertices(), 0);
  std::vector<Vertex> label(graph.num_vertices());
  for (std::size_t v = 0; v < graph.num_vertices(); ++v) {
    const std::size_t r = uf.find(v);
    if (!set[r]) {
      set[r] = 1;
      root_min[r] = static_cast<Vertex>(v);
    }
    label[v] = root_min[r];
  }
  return label;
}

std::vector<Vertex> cluster(const CouplingGraph& graph, std::span<const std::uint8_t> occupied,
                            Vertex x) {
  if (x >= graph.num_vertices()) throw std::out_of_range("cluster: vertex out of range");
  if (occupied.size() != graph.num_edges())
    throw CurrentsError("cluster: occupation flags must cover every edge");
  std::vector<std::uint8_t> seen(graph.num_vertices(), 0);
  std::vector<Vertex> out{x};
  seen[x] = 1;
  for (std::size_t head = 0; head < out.size(); ++head)
    for (const Incidence& inc : graph.neighbors(out[head]))
      if (occupied[inc.edge] && !seen[inc.neighbor]) {
        seen[inc.neighbor] = 1;
        out.push_back(inc.neighbor);
      }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Vertex> cluster(const CouplingGraph& graph, EdgeMask support, Vertex x) {
  require_trace_capacity(graph);
  std::vector<std::uint8_t> occupied(graph.num_edges());
  for (std::size_t i = 0; i < occupied.size(); ++i) occupied[i] = (support >> i) & 1u;
  return cluster(graph, occupied, x);
}

bool connected(const CouplingGraph& graph, EdgeMask support, Vertex x, Vertex y) {
  const Vertex pair[2] = {x, y};
  return interconnected(graph, support, pair);
}

bool interconnected(const CouplingGraph& graph, EdgeMask support, std::span<const Vertex> points) {
  if (points.empty()) return true;
  const auto label = components(graph, support);
  for (Vertex p : points) {
    if (p >= graph.num_vertices()) throw std::out_of_range("vertex out of range");
    if (label[p] != label[points[0]]) return false;
  }
  return true;
}

bool flow_exists(const CouplingGraph& graph, EdgeMask support, std::span<const Vertex> B) {
  const auto label = components(graph, support);
  std::vector<std::uint8_t> parity(graph.num_vertices(), 0);
  for (Vertex b : B) {
    if (b >= graph.num_vertices()) throw std::out_of_range("vertex out of range");
    parity[label[b]] ^= 1u;
  }
  return std::all_of(parity.begin(), parity.end(), [](std::uint8_t p) { return p == 0; });
}

EdgeMask subgraph_mask(const CouplingGraph& host, const CouplingGraph& sub) {
  require_trace_capacity(host);
  if (sub.num_vertices() != host.num_vertices())
    throw CurrentsError("subgraph must share the vertex set of the host graph");
  EdgeMask mask = 0;
  for (const Edge& e : sub.edges()) {
    const auto idx = host.find_edge(e.u, e.v);
    if (!idx)
      throw CurrentsError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                          ") is not an edge of the host graph");
    if (host.edge(*idx).J != e.J)
      throw CurrentsError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                          ") has a different coupling in the host graph");
    mask |= EdgeMask{1} << *idx;
  }
  return mask;
}

SwitchingResult switching_check(const CouplingGraph& graph, EdgeMask sub_edges, double beta,
                                std::span<const Vertex> A, std::span<const Vertex> B,
                                const std::function<double(Trace)>& F, std::size_t cap) {
  std::vector<Vertex> a_delta_b(A.begin(), A.end());
  a_delta_b.insert(a_delta_b.end(), B.begin(), B.end());
  sub_edges = valid_edges(graph, sub_edges);

  const auto t1 = sector_table(graph, beta, A, kAllEdges, true, cap);
  const auto t2 = sector_table(graph, beta, B, sub_edges, true, cap);
  const auto r1 = sector_table(graph, beta, a_delta_b, kAllEdges, true, cap);
  const auto r2 = sector_table(graph, beta, std::span<const Vertex>{}, sub_edges, true, cap);

  KahanSum lhs;
  for (const auto& a : t1.entries)
    for (const auto& b : t2.entries) {
      const double f = F(a.trace + b.trace);
      if (f != 0.0) lhs.add(f * a.weight * b.weight);
    }
  KahanSum rhs;
  for (const auto& a : r1.entries)
    for (const auto& b : r2.entries) {
      const Trace sum = a.trace + b.trace;
      if (!flow_exists(graph, sum.support & sub_edges, B)) continue;
      const double f = F(sum);
      if (f != 0.0) rhs.add(f * a.weight * b.weight);
    }
  SwitchingResult out{lhs.value(), rhs.value(), 0.0};
  out.abs_diff = std::abs(out.lhs - out.rhs);
  return out;
}

SwitchingResult switching_check(const CouplingGraph& g1, const CouplingGraph& g2, double beta,
                                std::span<const Vertex> A, std::span<const Vertex> B,
                                const std::function<double(Trace)>& F, std::size_t cap) {
  return switching_check(g1, subgraph_mask(g1, g2), beta, A, B, F, cap);
}

ClusterLaw::ClusterLaw(const CouplingGraph& graph, double beta, Vertex x,
                       std::optional<Vertex> partner, std::size_t cap)
    : n_(graph.num_vertices()) {
  if (n_ > std::min<std::size_t>(cap, 30))
    throw CapExceeded("cluster law cap exceeded: |V| = " + std::to_string(n_));
  if (x >= n_ || (partner && *partner >= n_))
    throw std::out_of_range("cluster law: vertex out of range");
  const bool has_sources = partner && *partner != x;
  const std::size_t full = (std::size_t{1} << n_) - 1;
  const std::size_t required =
      (std::size_t{1} << x) | (has_sources ? (std::size_t{1} << *partner) : 0);

  // Sourceless sums Z(C) on every induced subgraph, and the pair correlation
  // of the sources when both lie in C.
  std::vector<double> z_empty(full + 1, 0.0);
  std::vector<double> z_pair(has_sources ? full + 1 : 0, 0.0);
  std::vector<std::int8_t> spin(n_, 1);
  std::vector<Vertex> verts;
  for (std::size_t mask = 0; mask <= full; ++mask) {
    verts.clear();
    for (std::size_t v = 0; v < n_; ++v)
      if ((mask >> v) & 1u) verts.push_back(static_cast<Vertex>(v));
    const std::size_t k = verts.size();
    for (Vertex v : verts) spin[v] = 1;
    double log_w = 0.0;
    for (Vertex v : verts)
      for (const Incidence& inc : graph.neighbors(v))
        if (inc.neighbor > v && ((mask >> inc.neighbor) & 1u)) log_w += beta * graph.edge(inc.edge).J;
    const bool track = has_sources && (mask & required) == required;
    double sum = 0.0;
    double sum_pair = 0.0;
    const std::uint64_t count = std::uint64_t{1} << k;
    for (std::uint64_t step = 0; step < count; ++step) {
      if (step > 0) {
        const Vertex v = verts[static_cast<std::size_t>(std::countr_zero(step))];
        double field = 0.0;
        for (const Incidence& inc : graph.neighbors(v))
          if ((mask >> inc.neighbor) & 1u) field += graph.edge(inc.edge).J * spin[inc.neighbor];
        log_w -= 2.0 * beta * spin[v] * field;
        spin[v] = static_cast<std::int8_t>(-spin[v]);
      }
      const double w = std::exp(log_w);
      sum += w;
      if (track) sum_pair += w * spin[x] * spin[*partner];
    }
    const double scale = std::ldexp(1.0, -static_cast<int>(k));
    z_empty[mask] = sum * scale;
    if (track) z_pair[mask] = sum_pair * scale;
  }
  for (Vertex v = 0; v < n_; ++v) spin[v] = 1;
  if (!std::isfinite(z_empty[full])) throw CapExceeded("cluster law: partition sums overflow");

  // g(C): pair weight on G[C] with C(x) = C. Subsets precede supersets in
  // numeric order, so every g(C') is final when C is reached.
  std::vector<double> g(full + 1, 0.0);
  for (std::size_t mask = 0; mask <= full; ++mask) {
    if ((mask & required) != required) continue;
    const double z_a = has_sources ? z_pair[mask] : z_empty[mask];
    double value = z_a * z_empty[mask];
    const std::size_t free = mask & ~required;
    for (std::size_t sub = (free - 1) & free;; sub = (sub - 1) & free) {
      const std::size_t inner = sub | required;
      if (inner != mask) {
        const double rest = z_empty[mask & ~inner];
        value -= g[inner] * rest * rest;
      }
      if (sub == 0) break;
    }
    g[mask] = value;
  }
  const double z_a_full = has_sources ? z_pair[full] : z_empty[full];
  const double norm = z_a_full * z_empty[full];
  if (!(norm > 0.0)) throw CurrentsError("cluster law: empty source-constrained sector");
  prob_.assign(full + 1, 0.0);
  for (std::size_t mask = 0; mask <= full; ++mask) {
    if ((mask & required) != required) continue;
    const double rest = z_empty[full & ~mask];
    prob_[mask] = g[mask] * rest * rest / norm;
  }
}

double ClusterLaw::probability_contains(Vertex u) const {
  if (u >= n_) throw std::out_of_range("cluster law: vertex out of range");
  KahanSum acc;
  for (std::size_t mask = 0; mask < prob_.size(); ++mask)
    if ((mask >> u) & 1u) acc.add(prob_[mask]);
  return acc.value();
}

IntersectionLaw exact_intersection(const CouplingGraph& graph, double beta, Vertex x1, Vertex x2,
                                   Vertex x3, Vertex x4, std::size_t cap) {
  const ClusterLaw first(graph, beta, x1, x2, cap);
  const ClusterLaw second(graph, beta, x3, x4, cap);
  const std::size_t n = graph.num_vertices();
  const std::size_t full = (std::size_t{1} << n) - 1;

  // Subset sums of the second law: below[S] = P[D ⊆ S].
  std::vector<double> below(second.distribution().begin(), second.distribution().end());
  for (std::size_t bit = 0; bit < n; ++bit)
    for (std::size_t mask = 0; mask <= full; ++mask)
      if ((mask >> bit) & 1u) below[mask] += below[mask ^ (std::size_t{1} << bit)];

  KahanSum disjoint;
  const auto p1 = first.distribution();
  for (std::size_t mask = 0; mask <= full; ++mask)
    if (p1[mask] != 0.0) disjoint.add(p1[mask] * below[full & ~mask]);

  IntersectionLaw out;
  out.p_nonempty = 1.0 - disjoint.value();
  KahanSum size;
  for (Vertex u = 0; u < n; ++u)
    size.add(first.probability_contains(u) * second.probability_contains(u));
  out.mean_size = size.value();
  out.mean_size_given_nonempty = out.p_nonempty > 0.0 ? out.mean_size / out.p_nonempty : 0.0;
  return out;
}

}  // namespace rcising
