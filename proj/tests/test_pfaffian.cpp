#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numeric>

#include "rcising/ising_exact.hpp"
#include "rcising/pfaffian.hpp"
#include "rcising/rng.hpp"
#include "rcising/verification.hpp"

namespace rcising {
namespace {

AntisymmetricMatrix random_antisymmetric(std::size_t dim, std::uint64_t seed) {
  CounterRng rng(seed, 3);
  AntisymmetricMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i + 1; j < dim; ++j) m.set(i, j, 2.0 * rng.uniform() - 1.0);
  return m;
}

double determinant(const AntisymmetricMatrix& m) {
  Eigen::MatrixXd dense(m.dim(), m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j)
      dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return dense.determinant();
}

TEST(Pfaffian, TwoByTwo) {
  AntisymmetricMatrix m(2);
  m.set(0, 1, 0.37);
  EXPECT_DOUBLE_EQ(pfaffian(m), 0.37);
  EXPECT_DOUBLE_EQ(m(1, 0), -0.37);
}

TEST(Pfaffian, FourByFourThreeTerms) {
  AntisymmetricMatrix m(4);
  const double a12 = 0.3, a13 = -1.1, a14 = 0.7, a23 = 2.0, a24 = 0.4, a34 = -0.9;
  m.set(0, 1, a12);
  m.set(0, 2, a13);
  m.set(0, 3, a14);
  m.set(1, 2, a23);
  m.set(1, 3, a24);
  m.set(2, 3, a34);
  const double expected = a12 * a34 - a13 * a24 + a14 * a23;
  EXPECT_NEAR(pfaffian_expansion(m), expected, 1e-15);
  EXPECT_NEAR(pfaffian_elimination(m), expected, 1e-14);
}

TEST(Pfaffian, OddDimensionRejected) {
  EXPECT_THROW(pfaffian(AntisymmetricMatrix(3)), PfaffianError);
  EXPECT_DOUBLE_EQ(pfaffian(AntisymmetricMatrix(0)), 1.0);
}

TEST(Pfaffian, SquareIsDeterminant) {
  for (std::size_t dim : {2u, 4u, 6u, 8u, 10u, 12u, 16u})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const AntisymmetricMatrix m = random_antisymmetric(dim, seed);
      const double pf = pfaffian(m), det = determinant(m);
      EXPECT_NEAR(pf * pf, det, 1e-10 * std::max(1.0, std::abs(det))) << dim << " " << seed;
    }
}

TEST(Pfaffian, ExpansionAgreesWithElimination) {
  for (std::size_t dim : {2u, 4u, 6u, 8u})
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
      const AntisymmetricMatrix m = random_antisymmetric(dim, seed);
      EXPECT_NEAR(pfaffian_expansion(m), pfaffian_elimination(m), 1e-12);
    }
}

TEST(Pfaffian, BlockDiagonalIsProduct) {
  AntisymmetricMatrix m(6);
  m.set(0, 1, 2.0);
  m.set(2, 3, -3.0);
  m.set(4, 5, 0.5);
  EXPECT_NEAR(pfaffian_elimination(m), -3.0, 1e-15);
  EXPECT_NEAR(pfaffian_expansion(m), -3.0, 1e-15);
}

TEST(Pairings, CountIsDoubleFactorial) {
  EXPECT_EQ(all_pairings(2).size(), 1u);
  EXPECT_EQ(all_pairings(4).size(), 3u);
  EXPECT_EQ(all_pairings(6).size(), 15u);
  EXPECT_EQ(all_pairings(8).size(), 105u);
  for (const Pairing& p : all_pairings(6)) EXPECT_NO_THROW(validate_pairing(p));
  EXPECT_THROW(validate_pairing({{1, 0, 2}}), PfaffianError);
  EXPECT_THROW(validate_pairing({{1, 2, 0, 3}}), PfaffianError);
}

TEST(CrossingSign, FourPoints) {
  const std::vector<double> pos{1, 2, 3, 4};
  EXPECT_EQ(crossing_sign(pos, {{1, 0, 3, 2}}), 1);
  EXPECT_EQ(crossing_sign(pos, {{2, 3, 0, 1}}), -1);
  EXPECT_EQ(crossing_sign(pos, {{3, 2, 1, 0}}), 1);
}

TEST(CrossingSign, SixPointsWithTwoCrossings) {
  const std::vector<double> pos{0, 1, 2, 3, 4, 5};
  // Chords 0-3, 1-5, 2-4: 0-3 crosses both others, 1-5 and 2-4 are nested.
  EXPECT_EQ(crossing_sign(pos, {{3, 5, 4, 0, 2, 1}}), 1);
}

TEST(CrossingSign, RotationInvariant) {
  const auto pairings = all_pairings(8);
  std::vector<double> pos(8);
  std::iota(pos.begin(), pos.end(), 0.0);
  for (const Pairing& p : pairings) {
    const int base = crossing_sign(pos, p);
    for (int shift = 1; shift < 8; ++shift) {
      std::vector<double> rotated(8);
      for (int i = 0; i < 8; ++i) rotated[static_cast<std::size_t>(i)] = (i + shift) % 8;
      EXPECT_EQ(crossing_sign(rotated, p), base);
    }
  }
}

TEST(BoundaryPfaffian, FourCycle) {
  const CouplingGraph cycle(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 0, 1.0}},
                            {{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {0, 1, 2, 3});
  const std::vector<Vertex> points{0, 1, 2, 3};
  EXPECT_LE(boundary_pfaffian_residual(cycle, 0.7, points), 1e-10);
}

TEST(BoundaryPfaffian, TwoPointsAreExact) {
  const CouplingGraph g = free_grid(3, 3);
  const std::vector<Vertex> points{0, 8};
  EXPECT_EQ(boundary_pfaffian_residual(g, 0.6, points), 0.0);
}

TEST(BoundaryPfaffian, GridCorners) {
  const CouplingGraph g = free_grid(3, 3);
  const std::vector<Vertex> corners{0, 2, 8, 6};
  EXPECT_LE(boundary_pfaffian_residual(g, 0.4, corners), 1e-9);
  const auto report = boundary_pfaffian(g, 0.4, corners);
  EXPECT_EQ(report.ordered_points.size(), 4u);
}

TEST(BoundaryPfaffian, PlanarUrsellIdentity) {
  const CouplingGraph g = free_grid(3, 4);
  const double beta = 0.45;
  const GibbsTable table(g, {beta, 0.0});
  // Boundary points in cyclic order along the outer face.
  const Vertex a = 0, b = 3, c = 11, d = 8;
  const double u4 = table.ursell4(a, b, c, d);
  EXPECT_NEAR(u4, -2.0 * table.s2(a, c) * table.s2(b, d), 1e-10 * std::abs(u4));
}

TEST(BoundaryPfaffian, NonBoundaryPointRejected) {
  const CouplingGraph g = free_grid(3, 3);
  const std::vector<Vertex> points{0, 4};
  EXPECT_THROW(boundary_pfaffian_residual(g, 0.4, points), PfaffianError);
}

TEST(BoundaryPfaffian, InteriorCrossEdgesBreakIdentity) {
  // A diagonal next-nearest coupling makes the graph non-planar in this embedding.
  std::vector<Edge> edges;
  const CouplingGraph grid = free_grid(3, 3);
  for (const Edge& e : grid.edges()) edges.push_back(e);
  edges.push_back({0, 8, 1.0});
  edges.push_back({2, 6, 1.0});
  const CouplingGraph crossed(9, edges, grid.embedding(),
                              {grid.boundary_face().begin(), grid.boundary_face().end()});
  const std::vector<Vertex> corners{0, 2, 8, 6};
  EXPECT_GT(boundary_pfaffian_residual(crossed, 0.4, corners), 1e-6);
}

}  // namespace
}  // namespace rcising
