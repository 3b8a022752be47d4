#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rcising/graph.hpp"
#include "rcising/ising_exact.hpp"

namespace rcising {

class CurrentsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integer occupation of every edge, indexed like CouplingGraph::edges().
struct CurrentConfig {
  std::vector<std::uint64_t> occupation;
};

/// Vertices whose incident occupation sum is odd, ascending.
std::vector<Vertex> sources(const CouplingGraph& graph, const CurrentConfig& current);

/// prod_e (beta J_e)^{n_e} / n_e!.
double weight(const CouplingGraph& graph, double beta, const CurrentConfig& current);

/// Occupation of one edge collapsed to the data every connectivity and
/// parity event depends on.
enum class ReducedState : std::uint8_t { Zero, EvenPos, Odd };

/// Summed weight of all occupations in the class: 1, cosh(x) - 1, sinh(x).
double reduced_weight(ReducedState state, double beta_j);

/// Bit set over edge indices; traces are limited to graphs with at most 64 edges.
using EdgeMask = std::uint64_t;
inline constexpr EdgeMask kAllEdges = ~EdgeMask{0};
inline constexpr std::size_t kMaxTraceEdges = 64;

/// Largest number of free edges in one source-constrained sector.
inline constexpr std::size_t kReducedEdgeCap = 18;
/// Largest number of weighted terms in a replica expectation.
inline constexpr double kReplicaTermCap = 4e8;

/// Reduced image of a current: edges with n >= 1 and edges with n odd.
/// Invariant: odd is a subset of support.
struct Trace {
  EdgeMask support = 0;
  EdgeMask odd = 0;

  friend bool operator==(const Trace&, const Trace&) = default;
};

/// Trace of n1 + n2.
inline Trace operator+(Trace a, Trace b) { return {a.support | b.support, a.odd ^ b.odd}; }

/// One independent current: its source multiset and the edges it lives on.
struct Replica {
  std::vector<Vertex> sources;
  EdgeMask edges = kAllEdges;
};

/// Weighted list of the reduced traces of one sector {dn = A on edges}.
/// When parity is dropped, entries are aggregated by support and odd = 0.
struct SectorTable {
  struct Entry {
    Trace trace;
    double weight;
  };
  std::vector<Entry> entries;
  double total = 0.0;
};

SectorTable sector_table(const CouplingGraph& graph, double beta, std::span<const Vertex> A,
                         EdgeMask edges = kAllEdges, bool keep_parity = false,
                         std::size_t cap = kReducedEdgeCap);

/// sum_{dn = A} w(n) over currents supported on `edges`. Zero when A is unreachable.
double constrained_sum(const CouplingGraph& graph, double beta, std::span<const Vertex> A,
                       EdgeMask edges = kAllEdges, std::size_t cap = kReducedEdgeCap);

/// Function of one trace per replica group. Only traces are visible to it.
using ReplicaEvent = std::function<double(std::span<const Trace>)>;

/// Independent replicas whose currents are summed within each group.
/// An empty group list means every replica is its own group.
struct ReplicaQuery {
  std::vector<Replica> replicas;
  std::vector<std::vector<std::size_t>> groups;
  bool needs_parity = false;
};

/// E[event] under the product of normalized source-constrained current measures.
double replica_expectation(const CouplingGraph& graph, double beta, const ReplicaQuery& query,
                           const ReplicaEvent& event, std::size_t sector_cap = kReducedEdgeCap,
                           double term_cap = kReplicaTermCap);

/// Probability of a 0/1 event, one trace per replica.
double replica_probability(const CouplingGraph& graph, double beta,
                           std::span<const std::vector<Vertex>> sources, const ReplicaEvent& event);

/// Component labels (smallest vertex id of the component) of (V, support).
std::vector<Vertex> components(const CouplingGraph& graph, EdgeMask support);
/// Connected component of x in (V, support), ascending.
std::vector<Vertex> cluster(const CouplingGraph& graph, EdgeMask support, Vertex x);
/// Same for an arbitrary occupation flag per edge.
std::vector<Vertex> cluster(const CouplingGraph& graph, std::span<const std::uint8_t> occupied,
                            Vertex x);
bool connected(const CouplingGraph& graph, EdgeMask support, Vertex x, Vertex y);
/// All listed vertices lie in one component.
bool interconnected(const CouplingGraph& graph, EdgeMask support, std::span<const Vertex> points);

/// Whether some eta with supp(eta) inside `support` has boundary B, i.e. every
/// component of (V, support) holds an even number of B vertices.
bool flow_exists(const CouplingGraph& graph, EdgeMask support, std::span<const Vertex> B);

/// Edge mask of `sub` inside `host`. Throws if an edge is missing or its coupling differs.
EdgeMask subgraph_mask(const CouplingGraph& host, const CouplingGraph& sub);

struct SwitchingResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_diff = 0.0;
};

/// Both sides of the switching identity for n1 on the host graph and n2 on the
/// edges of `sub_edges`, with F evaluated on the trace of n1 + n2.
SwitchingResult switching_check(const CouplingGraph& graph, EdgeMask sub_edges, double beta,
                                std::span<const Vertex> A, std::span<const Vertex> B,
                                const std::function<double(Trace)>& F,
                                std::size_t cap = kReducedEdgeCap);
SwitchingResult switching_check(const CouplingGraph& g1, const CouplingGraph& g2, double beta,
                                std::span<const Vertex> A, std::span<const Vertex> B,
                                const std::function<double(Trace)>& F,
                                std::size_t cap = kReducedEdgeCap);

/// Largest |V| for the exact cluster law (cost 3^|V|).
inline constexpr std::size_t kClusterLawCap = 18;

/// Exact law of the cluster of x in n1 + n2, where dn1 = {x, partner} (or
/// empty without a partner, or when partner == x) and dn2 is empty.
/// Works on graphs too large for reduced enumeration.
class ClusterLaw {
 public:
  ClusterLaw(const CouplingGraph& graph, double beta, Vertex x, std::optional<Vertex> partner,
             std::size_t cap = kClusterLawCap);

  /// P[C(x) = C] indexed by the vertex mask of C.
  std::span<const double> distribution() const { return prob_; }
  double probability_contains(Vertex u) const;
  std::size_t num_vertices() const { return n_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> prob_;
};

struct IntersectionLaw {
  double p_nonempty = 0.0;
  double mean_size = 0.0;
  double mean_size_given_nonempty = 0.0;
};

/// Law of |C_{n1+n3}(x1) ∩ C_{n2+n4}(x3)| for dn1 = {x1,x2}, dn2 = {x3,x4}, dn3 = dn4 = ∅.
IntersectionLaw exact_intersection(const CouplingGraph& graph, double beta, Vertex x1, Vertex x2,
                                   Vertex x3, Vertex x4, std::size_t cap = kClusterLawCap);

}  // namespace rcising
