#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "rcising/graph.hpp"

namespace rcising {
namespace {

TEST(Lattice, TwoDimensionalTorusCounts) {
  const CouplingGraph g = build_lattice({2, 4, 1.0, Boundary::Periodic});
  EXPECT_EQ(g.num_vertices(), 16u);
  EXPECT_EQ(g.num_edges(), 32u);
  for (Vertex v = 0; v < 16; ++v) EXPECT_EQ(g.degree(v), 4u);
}

TEST(Lattice, FreePathOfThree) {
  const CouplingGraph g = build_lattice({1, 3, 1.0, Boundary::Free});
  EXPECT_EQ(g.num_vertices(), 3u);
  ASSERT_EQ(g.num_edges(), 2u);
  EXPECT_TRUE(g.find_edge(0, 1).has_value());
  EXPECT_TRUE(g.find_edge(1, 2).has_value());
  EXPECT_FALSE(g.find_edge(0, 2).has_value());
}

TEST(Lattice, PeriodicSideTwoIsRejected) {
  EXPECT_THROW(build_lattice({1, 2, 1.0, Boundary::Periodic}), GraphError);
  EXPECT_THROW(build_lattice({3, 2, 1.0, Boundary::Periodic}), GraphError);
}

TEST(Lattice, EdgeCountFormulaAcrossDimensions) {
  for (int d = 1; d <= 4; ++d)
    for (int L : {3, 4, 5}) {
      const CouplingGraph torus = build_lattice({d, L, 1.0, Boundary::Periodic});
      const auto sites = static_cast<std::size_t>(std::pow(L, d));
      EXPECT_EQ(torus.num_edges(), static_cast<std::size_t>(d) * sites);
      const CouplingGraph box = build_lattice({d, L, 1.0, Boundary::Free});
      EXPECT_EQ(box.num_edges(), static_cast<std::size_t>(d) * sites / L * (L - 1));
    }
}

TEST(Lattice, RowMajorNumberingRoundTrips) {
  const LatticeSpec spec{3, 5, 1.0, Boundary::Periodic};
  for (Vertex v = 0; v < 125; ++v) {
    const auto c = lattice_coordinates(spec, v);
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(lattice_index(spec, c), v);
  }
  const std::vector<int> c{1, 2, 3};
  EXPECT_EQ(lattice_index(spec, c), 1u * 25 + 2 * 5 + 3);
}

TEST(Lattice, Deterministic) {
  const LatticeSpec spec{2, 6, 0.7, Boundary::Free};
  EXPECT_TRUE(build_lattice(spec) == build_lattice(spec));
}

TEST(Lattice, SiteCapEnforced) {
  EXPECT_THROW(build_lattice({2, 100, 1.0, Boundary::Periodic}, 1000), GraphError);
}

TEST(Lattice, GraphDistanceOnTorus) {
  const LatticeSpec spec{2, 6, 1.0, Boundary::Periodic};
  const CouplingGraph g = build_lattice(spec);
  const std::vector<int> a{0, 0}, b{0, 5}, c{3, 3};
  EXPECT_DOUBLE_EQ(graph_distance(g, lattice_index(spec, a), lattice_index(spec, b)), 1.0);
  EXPECT_DOUBLE_EQ(graph_distance(g, lattice_index(spec, a), lattice_index(spec, c)),
                   std::sqrt(18.0));
}

TEST(Decorated, SingleVertexPair) {
  const CouplingGraph base(1, {});
  const CouplingGraph g = build_decorated(base, 2, 1.0, 1.0);
  EXPECT_EQ(g.num_vertices(), 2u);
  ASSERT_EQ(g.num_edges(), 1u);
  EXPECT_DOUBLE_EQ(g.edge(0).J, 0.5);
}

TEST(Decorated, BlockSizeOneIsTheBase) {
  const CouplingGraph base(2, {{0, 1, 1.0}});
  const CouplingGraph g = build_decorated(base, 1, 1.0, 0.0);
  EXPECT_EQ(g.num_vertices(), 2u);
  ASSERT_EQ(g.num_edges(), 1u);
  EXPECT_DOUBLE_EQ(g.edge(0).J, 1.0);
}

TEST(Decorated, SingleEdgeBlocksOfTwo) {
  const CouplingGraph base(2, {{0, 1, 1.0}});
  const CouplingGraph g = build_decorated(base, 2, 1.0, 1.0);
  EXPECT_EQ(g.num_vertices(), 4u);
  std::size_t intra = 0, inter = 0;
  for (const Edge& e : g.edges()) (g.block_of()[e.u] == g.block_of()[e.v] ? intra : inter)++;
  EXPECT_EQ(intra, 2u);
  EXPECT_EQ(inter, 4u);
}

TEST(Decorated, InterBlockCouplingSums) {
  const CouplingGraph base(3, {{0, 1, 0.8}, {1, 2, 1.3}});
  const double alpha = 0.9;
  const std::size_t N = 3;
  const CouplingGraph g = build_decorated(base, N, alpha, 0.6);
  EXPECT_EQ(g.block_size(), N);
  double between01 = 0.0, between12 = 0.0, between02 = 0.0;
  for (const Edge& e : g.edges()) {
    const auto bu = g.block_of()[e.u], bv = g.block_of()[e.v];
    const std::set<Vertex> pair{bu, bv};
    if (pair == std::set<Vertex>{0, 1}) between01 += e.J;
    if (pair == std::set<Vertex>{1, 2}) between12 += e.J;
    if (pair == std::set<Vertex>{0, 2}) between02 += e.J;
  }
  EXPECT_NEAR(between01, alpha * alpha * 0.8 * N, 1e-12);
  EXPECT_NEAR(between12, alpha * alpha * 1.3 * N, 1e-12);
  EXPECT_EQ(between02, 0.0);
}

TEST(GraphFile, ValidTwoVertexFile) {
  const CouplingGraph g = parse_graph(R"({"vertices": 2, "edges": [[0, 1, 1.0]]})");
  EXPECT_EQ(g.num_vertices(), 2u);
  ASSERT_EQ(g.num_edges(), 1u);
  EXPECT_DOUBLE_EQ(g.coupling(0, 1), 1.0);
}

TEST(GraphFile, NegativeCouplingNamesTheEdge) {
  try {
    parse_graph(R"({"vertices": 3, "edges": [[0, 1, 1.0], [1, 2, -0.5]]})");
    FAIL() << "expected GraphError";
  } catch (const GraphError& e) {
    EXPECT_NE(std::string(e.what()).find("edges[1]"), std::string::npos) << e.what();
  }
}

TEST(GraphFile, UndeclaredVertexRejected) {
  EXPECT_THROW(parse_graph(R"({"vertices": 2, "edges": [[0, 2, 1.0]]})"), GraphError);
}

TEST(GraphFile, ParallelEdgesAndLoopsRejected) {
  EXPECT_THROW(parse_graph(R"({"vertices": 2, "edges": [[0, 1, 1.0], [1, 0, 2.0]]})"),
               GraphError);
  EXPECT_THROW(parse_graph(R"({"vertices": 2, "edges": [[1, 1, 1.0]]})"), GraphError);
}

TEST(GraphFile, MalformedJsonRejected) {
  EXPECT_THROW(parse_graph("{\"vertices\": 2, \"edges\": ["), GraphError);
  EXPECT_THROW(parse_graph(R"({"edges": []})"), GraphError);
}

TEST(GraphFile, SaveLoadRoundTrip) {
  const CouplingGraph g(4, {{0, 1, 0.25}, {1, 2, 1.0 / 3.0}, {2, 3, 1.5}, {3, 0, 0.1}},
                        {{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {0, 1, 2, 3});
  const auto path = std::filesystem::temp_directory_path() / "rcising_graph_roundtrip.json";
  save_graph(g, path);
  const CouplingGraph back = load_graph(path);
  std::filesystem::remove(path);
  EXPECT_TRUE(back == g);
  EXPECT_TRUE(parse_graph(graph_to_json(g)) == g);
}

TEST(GraphFile, MissingFileRejected) {
  EXPECT_THROW(load_graph("/nonexistent/rcising.json"), GraphError);
}

}  // namespace
}  // namespace rcising
