#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "rcising/diagrams.hpp"
#include "rcising/ising_exact.hpp"
#include "rcising/verification.hpp"

namespace rcising {
namespace {

const CouplingGraph kEdge(2, {{0, 1, 1.0}});

S2Table exact_table(const CouplingGraph& g, double beta) {
  return S2Table::from_gibbs(GibbsTable(g, {beta, 0.0}));
}

TEST(S2Table, DenseMustBeSymmetric) {
  EXPECT_THROW(S2Table::dense(2, {1.0, 0.5, 0.4, 1.0}), DiagramError);
  EXPECT_THROW(S2Table::dense(2, {1.0, 0.5, 0.5}), DiagramError);
  const S2Table t = S2Table::dense(2, {1.0, 0.5, 0.5, 1.0});
  EXPECT_EQ(t(0, 1), 0.5);
}

TEST(S2Table, TranslationInvariantUsesDisplacement) {
  const LatticeSpec ring{1, 5, 1.0, Boundary::Periodic};
  const S2Table t = S2Table::translation_invariant(ring, {1.0, 0.6, 0.3, 0.3, 0.6});
  EXPECT_EQ(t(2, 3), 0.6);
  EXPECT_EQ(t(4, 0), 0.6);
  EXPECT_EQ(t(1, 4), 0.3);
  EXPECT_EQ(t(3, 3), 1.0);
}

TEST(Bubble, ZeroBetaOnlyCenter) {
  const CouplingGraph g = build_lattice({2, 4, 1.0, Boundary::Periodic});
  const S2Table t = exact_table(g, 0.0);
  for (double ell : {1.0, 2.0, 3.0}) EXPECT_NEAR(bubble(g, t, 0, ell), 1.0, 1e-14);
}

TEST(Bubble, SingleEdge) {
  const double beta = 0.7;
  const S2Table t = exact_table(kEdge, beta);
  EXPECT_NEAR(bubble(kEdge, t, 0, 2.0), 1.0 + std::pow(std::tanh(beta), 2), 1e-14);
  EXPECT_NEAR(bubble(kEdge, t, 0, 1.0), 1.0, 1e-14);
}

TEST(Tree, ZeroBetaDistinctPoints) {
  const CouplingGraph g = build_lattice({2, 3, 1.0, Boundary::Free});
  const S2Table t = exact_table(g, 0.0);
  EXPECT_NEAR(tree_rhs(t, {0, 2, 6, 8}), 0.0, 1e-15);
  EXPECT_NEAR(tree_rhs_balanced(t, g, 0.0, {0, 2, 6, 8}), 0.0, 1e-15);
  EXPECT_NEAR(GibbsTable(g, {0.0, 0.0}).ursell4(0, 2, 6, 8), 0.0, 1e-15);
}

TEST(Tree, CoincidentPoints) {
  const CouplingGraph g = build_lattice({2, 3, 1.0, Boundary::Free});
  const double beta = 0.4;
  const S2Table t = exact_table(g, beta);
  double expected = 0.0;
  for (Vertex u = 0; u < 9; ++u) expected += 2.0 * std::pow(t(u, 4), 4);
  EXPECT_NEAR(tree_rhs(t, {4, 4, 4, 4}), expected, 1e-14);
  EXPECT_GE(tree_rhs(t, {4, 4, 4, 4}), 2.0);
}

TEST(Tree, BoundsHoldOnCorpus) {
  CorpusOptions options;
  options.count = 30;
  options.seed = 31;
  options.min_vertices = 4;
  for (const auto& inst : random_corpus(options)) {
    const GibbsTable table(inst.graph, {inst.beta, 0.0});
    const S2Table t = S2Table::from_gibbs(table);
    const std::array<Vertex, 4> x{0, 1, 2, 3};
    const double u4 = std::abs(table.ursell4(0, 1, 2, 3));
    EXPECT_LE(u4, tree_rhs(t, x) * (1 + 1e-10) + 1e-15) << inst.index;
    EXPECT_LE(u4, tree_rhs_balanced(t, inst.graph, inst.beta, x) * (1 + 1e-10) + 1e-15)
        << inst.index;
  }
}

TEST(RRatio, IndependentSpins) {
  // |Lambda| = 16 at beta = 0: <M^2> = 16, <M^4> = 3 * 256 - 2 * 16.
  EXPECT_NEAR(r_ratio_from_block(16.0, 3.0 * 256.0 - 32.0), 2.0 / 16.0, 1e-15);
  const CouplingGraph g(16, {});
  const GibbsTable table(g, {0.0, 0.0});
  const std::vector<double> ones(16, 1.0);
  const auto m = table.linear_moments(ones, 4);
  EXPECT_NEAR(r_ratio_from_block(m[2], m[4]), 0.125, 1e-12);
}

TEST(RRatio, SingleSpin) {
  EXPECT_DOUBLE_EQ(r_ratio(1.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(r_ratio_from_block(1.0, 1.0), 2.0);
}

TEST(RRatio, WithinUniversalRangeOnTori) {
  for (double beta : {0.1, 0.3, 0.44, 0.7}) {
    const CouplingGraph g = build_lattice({2, 4, 1.0, Boundary::Periodic});
    const GibbsTable table(g, {beta, 0.0});
    const std::vector<double> ones(16, 1.0);
    const auto m = table.linear_moments(ones, 4);
    const double r = r_ratio_from_block(m[2], m[4]);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 2.0);
  }
}

TEST(Wick, SmallCases) {
  const CouplingGraph g = build_lattice({2, 3, 1.0, Boundary::Free});
  const S2Table t = exact_table(g, 0.5);
  const std::vector<Vertex> two{0, 5};
  EXPECT_DOUBLE_EQ(wick_functional(t, two), t(0, 5));
  const std::vector<Vertex> four{0, 2, 6, 8};
  EXPECT_NEAR(wick_functional(t, four),
              t(0, 2) * t(6, 8) + t(0, 6) * t(2, 8) + t(0, 8) * t(2, 6), 1e-15);
  EXPECT_NEAR(wick_functional(exact_table(g, 0.0), four), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(wick_functional(t, {}), 1.0);
  const std::vector<Vertex> odd{0, 1, 2};
  EXPECT_THROW(wick_functional(t, odd), DiagramError);
}

TEST(WickGap, ZeroBeta) {
  const CouplingGraph g = build_lattice({2, 3, 1.0, Boundary::Free});
  const std::vector<Vertex> pts{0, 2, 6, 8};
  const WickGap w = wick_gap_check(g, 0.0, pts);
  EXPECT_NEAR(w.gap, 0.0, 1e-15);
  EXPECT_NEAR(w.bound, 0.0, 1e-15);
  EXPECT_TRUE(w.holds);
}

TEST(WickGap, SixPointsOnGrid) {
  const CouplingGraph g = free_grid(2, 3, 0.4);
  const std::vector<Vertex> pts{0, 1, 2, 3, 4, 5};
  const WickGap w = wick_gap_check(g, 1.0, pts);
  EXPECT_TRUE(w.holds) << w.gap << " " << w.bound;
  EXPECT_GE(w.gap, -1e-10);
  EXPECT_LE(w.gap, w.bound + 1e-10);
  const GibbsTable table(g, {1.0, 0.0});
  const S2Table t = S2Table::from_gibbs(table);
  EXPECT_NEAR(w.gap, wick_functional(t, pts) - table.correlation(pts), 1e-12);
}

TEST(WickGap, FourPointsEqualsMinusUrsell) {
  const CouplingGraph g = build_lattice({2, 3, 1.0, Boundary::Periodic});
  const GibbsTable table(g, {0.3, 0.0});
  const std::vector<Vertex> pts{0, 1, 4, 8};
  const WickGap w = wick_gap_check(table, pts);
  EXPECT_NEAR(w.gap, -table.ursell4(0, 1, 4, 8), 1e-13);
  EXPECT_NEAR(w.bound, -1.5 * table.ursell4(0, 1, 4, 8), 1e-13);
}

TEST(MgfGap, ZeroIsTrivial) {
  const GibbsTable table(kEdge, {0.8, 0.0});
  const std::vector<double> f{1.0, 1.0};
  const std::vector<Vertex> block{0, 1};
  const std::vector<double> z{0.0};
  const MgfGap gap = mgf_gap_check_exact(table, f, block, z);
  EXPECT_NEAR(gap.lhs[0], 0.0, 1e-15);
  EXPECT_NEAR(gap.rhs[0], 0.0, 1e-15);
  EXPECT_LE(gap.max_violation, 0.0);
}

TEST(MgfGap, SingleEdgeSatisfied) {
  const GibbsTable table(kEdge, {0.8, 0.0});
  const std::vector<double> f{1.0, 1.0};
  const std::vector<Vertex> block{0, 1};
  std::vector<double> z;
  for (int i = -8; i <= 8; ++i)
    if (i != 0) z.push_back(0.25 * i);
  const MgfGap gap = mgf_gap_check_exact(table, f, block, z);
  EXPECT_LT(gap.max_violation, 0.0);
}

TEST(MgfGap, IndependentBlockOfSixteen) {
  const CouplingGraph g(16, {});
  const GibbsTable table(g, {0.0, 0.0});
  const std::vector<double> f(16, 1.0);
  std::vector<Vertex> block(16);
  std::iota(block.begin(), block.end(), 0);
  const SmearedMoments m = exact_smeared_moments(table, f, block);
  EXPECT_NEAR(m.sigma, 16.0, 1e-12);
  EXPECT_NEAR(m.t_f2, 1.0, 1e-12);
  EXPECT_NEAR(m.r_tilde, 2.0 / 16.0, 1e-12);
  const std::vector<double> z{-2.0, -1.0, 0.5, 1.0, 2.0};
  EXPECT_LT(mgf_gap_check_exact(table, f, block, z).max_violation, 0.0);
}

TEST(MgfGap, SamplesTooFewForLargeZ) {
  const std::vector<double> samples{0.1, -0.2, 3.0, 0.0};
  const std::vector<double> z{5.0};
  EXPECT_THROW(mgf_gap_check_samples(samples, z, 1.0, 0.1), DiagramError);
}

TEST(TestFunctions, ShapesAndSupport) {
  const std::vector<double> origin{0.0, 0.0}, half{0.5, 0.0}, edge{1.0, 0.3}, out{1.2, 0.0};
  for (auto kind : {TestFunction::Indicator, TestFunction::Tent, TestFunction::CosineProduct}) {
    EXPECT_DOUBLE_EQ(test_function(kind, origin), 1.0);
    EXPECT_EQ(test_function(kind, out), 0.0);
  }
  EXPECT_DOUBLE_EQ(test_function(TestFunction::Indicator, half), 1.0);
  EXPECT_DOUBLE_EQ(test_function(TestFunction::Tent, half), 0.5);
  EXPECT_NEAR(test_function(TestFunction::CosineProduct, half), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(test_function(TestFunction::Tent, edge), 0.0, 1e-15);
  EXPECT_NEAR(test_function(TestFunction::CosineProduct, edge), 0.0, 1e-15);
  EXPECT_EQ(parse_test_function("tent"), TestFunction::Tent);
  EXPECT_THROW(parse_test_function("gaussian"), DiagramError);
}

TEST(TestFunctions, SmearingUsesMinimalImage) {
  const LatticeSpec spec{2, 6, 1.0, Boundary::Periodic};
  const std::vector<int> c{3, 3};
  const Vertex center = lattice_index(spec, c);
  const auto w = smearing_weights(spec, TestFunction::Tent, 2.0, center);
  EXPECT_DOUBLE_EQ(w[center], 1.0);
  const std::vector<int> side{3, 4}, diagonal{4, 4}, far{0, 0};
  EXPECT_DOUBLE_EQ(w[lattice_index(spec, side)], 0.5);
  EXPECT_DOUBLE_EQ(w[lattice_index(spec, diagonal)], 0.25);
  EXPECT_DOUBLE_EQ(w[lattice_index(spec, far)], 0.0);
  const auto wrap = smearing_weights(spec, TestFunction::Indicator, 1.0, 0);
  const std::vector<int> across{5, 0};
  EXPECT_DOUBLE_EQ(wrap[lattice_index(spec, across)], 1.0);
}

TEST(TestFunctions, MgfBoundAndTransferOnSmallTorus) {
  const LatticeSpec spec{2, 4, 1.0, Boundary::Periodic};
  const CouplingGraph g = build_lattice(spec);
  const std::vector<int> c{2, 2};
  const Vertex center = lattice_index(spec, c);
  std::vector<Vertex> block;
  for (Vertex v = 0; v < 16; ++v) {
    const auto x = lattice_coordinates(spec, v);
    if (std::abs(x[0] - 2) <= 1 && std::abs(x[1] - 2) <= 1) block.push_back(v);
  }
  std::vector<double> z;
  for (int i = -8; i <= 8; ++i) z.push_back(0.25 * i);
  for (double beta : {0.2, 0.44}) {
    const GibbsTable table(g, {beta, 0.0});
    for (auto kind : {TestFunction::Indicator, TestFunction::Tent, TestFunction::CosineProduct}) {
      const auto f = smearing_weights(spec, kind, 1.0, center);
      const MgfGap gap = mgf_gap_check_exact(table, f, block, z);
      EXPECT_LE(gap.max_violation, 1e-12) << beta << " " << static_cast<int>(kind);
      const SmearedMoments m = exact_smeared_moments(table, f, block);
      const std::vector<double> ones(16, 1.0);
      std::vector<double> indicator(16, 0.0);
      for (Vertex v : block) indicator[v] = 1.0;
      const auto bm = table.linear_moments(indicator, 4);
      const TransferCheck t =
          smeared_transfer_check(m.r_tilde, m.t_f2, r_ratio_from_block(bm[2], bm[4]), 1.0, 2, 1.0,
                                   1e-12);
      EXPECT_TRUE(t.holds) << t.ratio_margin << " " << t.variance_margin;
    }
  }
}

TEST(Diagnostics, ZeroBetaIsDegenerate) {
  const LatticeSpec spec{2, 8, 1.0, Boundary::Periodic};
  std::vector<std::vector<double>> bins(4, std::vector<double>(64, 0.0));
  for (auto& b : bins) b[0] = 1.0;
  const RadialProfile profile = radial_profile(spec, bins);
  const S2Report report = s2_diagnostics(profile, 2, 0.0, 1.0, 4.0);
  EXPECT_TRUE(report.degenerate);
  EXPECT_FALSE(report.note.empty());
}

TEST(Diagnostics, PowerLawExponentRecovered) {
  const LatticeSpec spec{2, 64, 1.0, Boundary::Periodic};
  const std::size_t n = 64 * 64;
  std::vector<std::vector<double>> bins(8, std::vector<double>(n));
  for (std::size_t b = 0; b < bins.size(); ++b)
    for (Vertex v = 0; v < n; ++v) {
      const auto c = lattice_coordinates(spec, v);
      const double dx = std::min(c[0], 64 - c[0]), dy = std::min(c[1], 64 - c[1]);
      const double r = std::hypot(dx, dy);
      bins[b][v] = r == 0.0 ? 1.0 : std::pow(r, -0.7) * (1.0 + 1e-3 * (b % 2 ? 1 : -1));
    }
  const S2Report report = s2_diagnostics(radial_profile(spec, bins), 2, 0.5, 2.0, 16.0);
  EXPECT_FALSE(report.degenerate);
  EXPECT_NEAR(report.exponent.mean, 0.7, 0.02);
  EXPECT_TRUE(report.scaled_non_increasing);
  EXPECT_EQ(report.classes.size(), 3u);
  // Largest class average is the innermost class [2, 4), averaged over distinct radii.
  std::set<int> shells;
  for (int x = 0; x <= 4; ++x)
    for (int y = 0; y <= 4; ++y)
      if (x * x + y * y >= 4 && x * x + y * y < 16) shells.insert(x * x + y * y);
  double sum = 0.0;
  for (int d2 : shells) sum += std::pow(std::sqrt(d2), -0.7);
  const double count = static_cast<double>(shells.size());
  EXPECT_NEAR(report.c2, 0.5 * sum / count, 1e-12);
}

TEST(Diagnostics, SymmetricSquareCorners) {
  const LatticeSpec spec{2, 8, 1.0, Boundary::Periodic};
  const auto q = symmetric_square(spec, 4);
  std::vector<std::vector<int>> c;
  for (Vertex v : q) c.push_back(lattice_coordinates(spec, v));
  for (int j = 0; j < 4; ++j) {
    const auto& a = c[j];
    const auto& b = c[(j + 1) % 4];
    EXPECT_EQ(std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]), 4);
  }
  EXPECT_THROW(symmetric_square({3, 8, 1.0, Boundary::Periodic}, 4), DiagramError);
}

TEST(Diagnostics, SymmetricSquareBoundExactOnSmallTorus) {
  const LatticeSpec spec{2, 4, 1.0, Boundary::Periodic};
  const CouplingGraph g = build_lattice(spec);
  const auto q = symmetric_square(spec, 2);
  for (double beta : {0.2, 0.44, 0.6}) {
    const GibbsTable table(g, {beta, 0.0});
    const double u4 = std::abs(table.ursell4(q[0], q[1], q[2], q[3]));
    EXPECT_GE(u4, table.s2(q[0], q[2]) * table.s2(q[1], q[3]) - 1e-12) << beta;
  }
}

}  // namespace
}  // namespace rcising
