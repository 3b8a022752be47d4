#include "rcising/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace rcising {

namespace {

std::string edge_label(std::size_t i, const Edge& e) {
  std::ostringstream os;
  os << "edges[" << i << "] (" << e.u << ", " << e.v << ")";
  return os.str();
}

std::size_t checked_power(std::size_t base, int exponent, std::size_t cap) {
  std::size_t result = 1;
  for (int i = 0; i < exponent; ++i) {
    if (result > cap / base) throw GraphError("lattice exceeds site cap");
    result *= base;
  }
  if (result > cap) throw GraphError("lattice exceeds site cap");
  return result;
}

}  // namespace

CouplingGraph::CouplingGraph(std::size_t num_vertices, std::vector<Edge> edges,
                             std::vector<std::vector<int>> embedding,
                             std::vector<Vertex> boundary_face)
    : num_vertices_(num_vertices),
      edges_(std::move(edges)),
      embedding_(std::move(embedding)),
      boundary_face_(std::move(boundary_face)) {
  if (num_vertices_ > std::numeric_limits<Vertex>::max())
    throw GraphError("too many vertices");
  std::set<std::pair<Vertex, Vertex>> seen;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (e.u >= num_vertices_ || e.v >= num_vertices_)
      throw GraphError(edge_label(i, e) + ": vertex id out of range");
    if (e.u == e.v) throw GraphError(edge_label(i, e) + ": self-loop");
    if (!(e.J >= 0.0) || !std::isfinite(e.J))
      throw GraphError(edge_label(i, e) + ": negative or non-finite coupling " +
                       std::to_string(e.J));
    auto key = std::minmax(e.u, e.v);
    if (!seen.insert({key.first, key.second}).second)
      throw GraphError(edge_label(i, e) + ": duplicate edge");
  }
  if (!embedding_.empty()) {
    if (embedding_.size() != num_vertices_)
      throw GraphError("embedding: expected one coordinate vector per vertex");
    for (std::size_t v = 0; v < embedding_.size(); ++v)
      if (embedding_[v].size() != embedding_[0].size())
        throw GraphError("embedding[" + std::to_string(v) + "]: inconsistent dimension");
  }
  if (!boundary_face_.empty()) {
    std::set<Vertex> distinct(boundary_face_.begin(), boundary_face_.end());
    if (distinct.size() != boundary_face_.size())
      throw GraphError("boundary_face: repeated vertex");
    if (boundary_face_.size() < 3) throw GraphError("boundary_face: cycle needs >= 3 vertices");
    for (Vertex v : boundary_face_)
      if (v >= num_vertices_) throw GraphError("boundary_face: vertex id out of range");
    for (std::size_t i = 0; i < boundary_face_.size(); ++i) {
      Vertex a = boundary_face_[i];
      Vertex b = boundary_face_[(i + 1) % boundary_face_.size()];
      if (!seen.count({std::min(a, b), std::max(a, b)}))
        throw GraphError("boundary_face: consecutive vertices " + std::to_string(a) + ", " +
                         std::to_string(b) + " are not adjacent");
    }
  }
  build_adjacency();
}

void CouplingGraph::build_adjacency() {
  offsets_.assign(num_vertices_ + 1, 0);
  for (const Edge& e : edges_) {
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  for (std::size_t v = 0; v < num_vertices_; ++v) offsets_[v + 1] += offsets_[v];
  adjacency_.resize(offsets_.back());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    adjacency_[fill[e.u]++] = {e.v, static_cast<std::uint32_t>(i)};
    adjacency_[fill[e.v]++] = {e.u, static_cast<std::uint32_t>(i)};
  }
}

std::optional<std::size_t> CouplingGraph::find_edge(Vertex u, Vertex v) const {
  if (u >= num_vertices_ || v >= num_vertices_) return std::nullopt;
  for (const Incidence& inc : neighbors(u))
    if (inc.neighbor == v) return inc.edge;
  return std::nullopt;
}

double CouplingGraph::coupling(Vertex u, Vertex v) const {
  auto e = find_edge(u, v);
  return e ? edges_[*e].J : 0.0;
}

bool CouplingGraph::ferromagnetic() const {
  return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.J >= 0.0; });
}

bool CouplingGraph::all_couplings_positive() const {
  return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.J > 0.0; });
}

std::vector<int> lattice_coordinates(const LatticeSpec& spec, Vertex v) {
  std::vector<int> c(spec.d);
  for (int k = spec.d - 1; k >= 0; --k) {
    c[k] = static_cast<int>(v % spec.L);
    v /= spec.L;
  }
  return c;
}

Vertex lattice_index(const LatticeSpec& spec, std::span<const int> coords) {
  std::size_t idx = 0;
  for (int k = 0; k < spec.d; ++k) {
    int c = coords[k] % spec.L;
    if (c < 0) c += spec.L;
    idx = idx * spec.L + c;
  }
  return static_cast<Vertex>(idx);
}

CouplingGraph build_lattice(const LatticeSpec& spec, std::size_t site_cap) {
  if (spec.d < 1) throw GraphError("lattice dimension must be >= 1");
  if (spec.L < 1) throw GraphError("lattice side must be >= 1");
  if (!(spec.J > 0.0)) throw GraphError("lattice coupling must be > 0");
  if (spec.bc == Boundary::Periodic && spec.L < 3)
    throw GraphError("periodic lattice requires L >= 3 (L = " + std::to_string(spec.L) +
                     " would create parallel edges)");
  const std::size_t n = checked_power(static_cast<std::size_t>(spec.L), spec.d, site_cap);

  CouplingGraph g;
  g.num_vertices_ = n;
  g.embedding_.resize(n);
  std::vector<int> c;
  for (std::size_t v = 0; v < n; ++v) {
    c = lattice_coordinates(spec, static_cast<Vertex>(v));
    g.embedding_[v] = c;
    for (int k = 0; k < spec.d; ++k) {
      if (c[k] + 1 >= spec.L && spec.bc == Boundary::Free) continue;
      std::vector<int> nb = c;
      nb[k] += 1;
      g.edges_.push_back({static_cast<Vertex>(v), lattice_index(spec, nb), spec.J});
    }
  }
  if (spec.d == 2 && spec.bc == Boundary::Free && spec.L >= 2) {
    const int L = spec.L;
    auto at = [&](int r, int col) { return static_cast<Vertex>(r * L + col); };
    for (int col = 0; col < L; ++col) g.boundary_face_.push_back(at(0, col));
    for (int r = 1; r < L; ++r) g.boundary_face_.push_back(at(r, L - 1));
    for (int col = L - 2; col >= 0; --col) g.boundary_face_.push_back(at(L - 1, col));
    for (int r = L - 2; r >= 1; --r) g.boundary_face_.push_back(at(r, 0));
  }
  g.lattice_ = spec;
  g.build_adjacency();
  return g;
}

CouplingGraph build_decorated(const CouplingGraph& base, std::size_t N, double alpha, double g,
                              std::size_t site_cap) {
  if (N < 1) throw GraphError("block size must be >= 1");
  if (!(alpha > 0.0)) throw GraphError("alpha must be > 0");
  if (!(g >= 0.0)) throw GraphError("g must be >= 0");
  if (base.num_vertices() > site_cap / N) throw GraphError("decorated graph exceeds site cap");
  const std::size_t n = base.num_vertices() * N;
  const double scale = alpha * alpha / static_cast<double>(N);

  std::vector<Edge> edges;
  if (g > 0.0) {
    for (std::size_t x = 0; x < base.num_vertices(); ++x)
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j)
          edges.push_back({static_cast<Vertex>(x * N + i), static_cast<Vertex>(x * N + j),
                           g * scale});
  }
  for (const Edge& e : base.edges())
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j)
        edges.push_back({static_cast<Vertex>(e.u * N + i), static_cast<Vertex>(e.v * N + j),
                         e.J * scale});

  CouplingGraph out(n, std::move(edges));
  out.block_of_.resize(n);
  for (std::size_t s = 0; s < n; ++s) out.block_of_[s] = static_cast<Vertex>(s / N);
  out.block_size_ = N;
  return out;
}

CouplingGraph parse_graph(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw GraphError(std::string("graph file: parse error: ") + e.what());
  }
  if (!j.is_object()) throw GraphError("graph file: top level must be an object");
  if (!j.contains("vertices") || !j["vertices"].is_number_integer() || j["vertices"].get<long long>() < 0)
    throw GraphError("graph file: 'vertices' must be a non-negative integer");
  const auto n = j["vertices"].get<std::size_t>();
  std::vector<Edge> edges;
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) throw GraphError("graph file: 'edges' must be an array");
    const auto& arr = j["edges"];
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto& item = arr[i];
      const std::string where = "edges[" + std::to_string(i) + "]";
      if (!item.is_array() || item.size() != 3 || !item[0].is_number_integer() ||
          !item[1].is_number_integer() || !item[2].is_number())
        throw GraphError(where + ": expected [u, v, J]");
      long long u = item[0].get<long long>();
      long long v = item[1].get<long long>();
      double J = item[2].get<double>();
      if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n)
        throw GraphError(where + ": references undeclared vertex (" + std::to_string(u) + ", " +
                         std::to_string(v) + ")");
      if (J < 0.0)
        throw GraphError(where + " (" + std::to_string(u) + ", " + std::to_string(v) +
                         "): negative coupling " + std::to_string(J));
      edges.push_back({static_cast<Vertex>(u), static_cast<Vertex>(v), J});
    }
  }
  std::vector<std::vector<int>> embedding;
  if (j.contains("embedding")) {
    try {
      embedding = j["embedding"].get<std::vector<std::vector<int>>>();
    } catch (const nlohmann::json::exception&) {
      throw GraphError("graph file: 'embedding' must be a list of integer coordinate lists");
    }
  }
  std::vector<Vertex> face;
  if (j.contains("boundary_face")) {
    try {
      face = j["boundary_face"].get<std::vector<Vertex>>();
    } catch (const nlohmann::json::exception&) {
      throw GraphError("graph file: 'boundary_face' must be a list of vertex ids");
    }
  }
  return CouplingGraph(n, std::move(edges), std::move(embedding), std::move(face));
}

CouplingGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open graph file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_graph(buf.str());
  } catch (const GraphError& e) {
    throw GraphError(path.string() + ": " + e.what());
  }
}

std::string graph_to_json(const CouplingGraph& graph) {
  nlohmann::json j;
  j["vertices"] = graph.num_vertices();
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : graph.edges()) j["edges"].push_back({e.u, e.v, e.J});
  if (graph.has_embedding()) j["embedding"] = graph.embedding();
  if (graph.has_boundary_face())
    j["boundary_face"] =
        std::vector<Vertex>(graph.boundary_face().begin(), graph.boundary_face().end());
  return j.dump();
}

void save_graph(const CouplingGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw GraphError("cannot write graph file " + path.string());
  out << graph_to_json(graph) << '\n';
}

double graph_distance(const CouplingGraph& graph, Vertex x, Vertex y) {
  if (x == y) return 0.0;
  if (graph.has_embedding()) {
    const auto& a = graph.embedding()[x];
    const auto& b = graph.embedding()[y];
    const auto& lat = graph.lattice();
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      int diff = std::abs(a[k] - b[k]);
      if (lat && lat->bc == Boundary::Periodic) diff = std::min(diff, lat->L - diff);
      s += static_cast<double>(diff) * diff;
    }
    return std::sqrt(s);
  }
  std::vector<int> dist(graph.num_vertices(), -1);
  std::deque<Vertex> queue{x};
  dist[x] = 0;
  while (!queue.empty()) {
    Vertex v = queue.front();
    queue.pop_front();
    for (const Incidence& inc : graph.neighbors(v)) {
      if (dist[inc.neighbor] >= 0) continue;
      dist[inc.neighbor] = dist[v] + 1;
      if (inc.neighbor == y) return dist[y];
      queue.push_back(inc.neighbor);
    }
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace rcising
