#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcising {

using Vertex = std::uint32_t;

/// Default limit on the number of sites any builder will produce.
inline constexpr std::size_t kDefaultSiteCap = 20'000'000;

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  Vertex u;
  Vertex v;
  double J;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Neighbor entry of the adjacency list: the other endpoint and the edge index.
struct Incidence {
  Vertex neighbor;
  std::uint32_t edge;
};

enum class Boundary { Free, Periodic };

struct LatticeSpec {
  int d = 2;
  int L = 4;
  double J = 1.0;
  Boundary bc = Boundary::Periodic;

  friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;
};

/// Finite ferromagnetic coupling graph. Immutable after construction.
///
/// Vertex ids are dense in [0, num_vertices). Edges carry J >= 0; self-loops
/// and parallel edges are rejected. Optional extras: an integer embedding used
/// by distance-resolved observables, a marked boundary face (simple cycle)
/// used by the boundary Pfaffian checks, the lattice description when the
/// graph was produced by build_lattice, and the block map of decorated graphs.
class CouplingGraph {
 public:
  CouplingGraph() = default;
  CouplingGraph(std::size_t num_vertices, std::vector<Edge> edges,
                std::vector<std::vector<int>> embedding = {},
                std::vector<Vertex> boundary_face = {});

  std::size_t num_vertices() const { return num_vertices_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(std::size_t i) const { return edges_[i]; }

  std::span<const Incidence> neighbors(Vertex v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  std::size_t degree(Vertex v) const { return offsets_[v + 1] - offsets_[v]; }

  std::optional<std::size_t> find_edge(Vertex u, Vertex v) const;
  /// Coupling of the pair, zero when the pair is not an edge.
  double coupling(Vertex u, Vertex v) const;

  bool has_embedding() const { return !embedding_.empty(); }
  const std::vector<std::vector<int>>& embedding() const { return embedding_; }
  bool has_boundary_face() const { return !boundary_face_.empty(); }
  std::span<const Vertex> boundary_face() const { return boundary_face_; }

  const std::optional<LatticeSpec>& lattice() const { return lattice_; }
  /// For decorated graphs: block (base vertex) of every site. Empty otherwise.
  std::span<const Vertex> block_of() const { return block_of_; }
  std::size_t block_size() const { return block_size_; }

  bool ferromagnetic() const;
  bool all_couplings_positive() const;

  /// Structural equality: vertex count, edge list, embedding and boundary face.
  friend bool operator==(const CouplingGraph& a, const CouplingGraph& b) {
    return a.num_vertices_ == b.num_vertices_ && a.edges_ == b.edges_ &&
           a.embedding_ == b.embedding_ && a.boundary_face_ == b.boundary_face_;
  }

 private:
  friend CouplingGraph build_lattice(const LatticeSpec&, std::size_t);
  friend CouplingGraph build_decorated(const CouplingGraph&, std::size_t, double, double,
                                       std::size_t);

  void build_adjacency();

  std::size_t num_vertices_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Incidence> adjacency_;
  std::vector<std::vector<int>> embedding_;
  std::vector<Vertex> boundary_face_;
  std::optional<LatticeSpec> lattice_;
  std::vector<Vertex> block_of_;
  std::size_t block_size_ = 0;
};

/// Hypercubic box of side L in Z^d. Vertices are numbered row-major over
/// coordinates (last coordinate fastest). Edges are emitted vertex by vertex,
/// axis by axis, towards the +e_k neighbor.
CouplingGraph build_lattice(const LatticeSpec& spec, std::size_t site_cap = kDefaultSiteCap);

/// Griffiths-Simon decoration: base vertex x becomes N sites x*N + i.
/// Intra-block pairs couple with g*alpha^2/N (omitted when g == 0), each
/// inter-block constituent pair with alpha^2*J_xy/N.
CouplingGraph build_decorated(const CouplingGraph& base, std::size_t N, double alpha, double g,
                              std::size_t site_cap = kDefaultSiteCap);

CouplingGraph load_graph(const std::filesystem::path& path);
CouplingGraph parse_graph(const std::string& json_text);
std::string graph_to_json(const CouplingGraph& graph);
void save_graph(const CouplingGraph& graph, const std::filesystem::path& path);

/// Lattice coordinates of a vertex (row-major decoding).
std::vector<int> lattice_coordinates(const LatticeSpec& spec, Vertex v);
Vertex lattice_index(const LatticeSpec& spec, std::span<const int> coords);

/// Euclidean distance between two vertices: minimal-image on periodic
/// lattices, plain Euclidean with an embedding, hop distance otherwise.
double graph_distance(const CouplingGraph& graph, Vertex x, Vertex y);

}  // namespace rcising
