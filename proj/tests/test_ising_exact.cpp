#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "rcising/currents.hpp"
#include "rcising/ising_exact.hpp"
#include "rcising/verification.hpp"

namespace rcising {
namespace {

const CouplingGraph kEdge(2, {{0, 1, 1.0}});

TEST(PartitionFunction, SingleEdge) {
  EXPECT_DOUBLE_EQ(partition_function(kEdge, {0.0, 0.0}), 4.0);
  EXPECT_NEAR(partition_function(kEdge, {1.0, 0.0}), 6.1723226, 1e-7);
  EXPECT_NEAR(partition_function(kEdge, {1.0, 0.0}), 4.0 * std::cosh(1.0), 1e-13);
}

TEST(PartitionFunction, IsolatedVerticesIgnoreBeta) {
  const CouplingGraph g(2, {});
  for (double beta : {0.0, 0.5, 3.0}) EXPECT_DOUBLE_EQ(partition_function(g, {beta, 0.0}), 4.0);
}

TEST(PartitionFunction, FieldOnSingleSpin) {
  const CouplingGraph g(1, {});
  EXPECT_NEAR(partition_function(g, {0.7, 0.3}), 2.0 * std::cosh(0.21), 1e-14);
}

TEST(PartitionFunction, OpenChainClosedForm) {
  // Free chain of n spins: Z = 2 (2 cosh bJ)^(n-1).
  const CouplingGraph chain = build_lattice({1, 7, 0.6, Boundary::Free});
  const double beta = 1.3;
  EXPECT_NEAR(partition_function(chain, {beta, 0.0}),
              2.0 * std::pow(2.0 * std::cosh(beta * 0.6), 6), 1e-9);
}

TEST(PartitionFunction, CapEnforced) {
  const CouplingGraph big = build_lattice({1, 30, 1.0, Boundary::Free});
  EXPECT_THROW(partition_function(big, {0.1, 0.0}), CapExceeded);
}

TEST(Correlation, SingleEdgeTanh) {
  const std::array<Vertex, 2> pair{0, 1};
  for (double beta : {0.1, 0.5, 1.7})
    EXPECT_NEAR(correlation(kEdge, {beta, 0.0}, pair), std::tanh(beta), 1e-14);
}

TEST(Correlation, OddAndRepeatedSets) {
  const std::array<Vertex, 1> one{0};
  const std::array<Vertex, 2> twice{0, 0};
  EXPECT_EQ(correlation(kEdge, {0.8, 0.0}, one), 0.0);
  EXPECT_DOUBLE_EQ(correlation(kEdge, {0.8, 0.0}, twice), 1.0);
}

TEST(Correlation, PeriodicRingClosedForm) {
  // Ring of n spins: <s0 sr> = (t^r + t^(n-r)) / (1 + t^n), t = tanh bJ.
  const int n = 9;
  const CouplingGraph ring = build_lattice({1, n, 1.0, Boundary::Periodic});
  const double beta = 0.9, t = std::tanh(beta);
  for (Vertex r = 1; r < n; ++r) {
    const std::array<Vertex, 2> pair{0, r};
    const double expected = (std::pow(t, r) + std::pow(t, n - r)) / (1.0 + std::pow(t, n));
    EXPECT_NEAR(correlation(ring, {beta, 0.0}, pair), expected, 1e-13);
  }
}

TEST(Correlation, GibbsTableAgrees) {
  const CouplingGraph g = build_lattice({2, 3, 0.8, Boundary::Periodic});
  const ThermoParams p{0.45, 0.0};
  const GibbsTable table(g, p);
  for (Vertex y = 0; y < 9; ++y) {
    const std::array<Vertex, 2> pair{0, y};
    EXPECT_NEAR(table.s2(0, y), correlation(g, p, pair), 1e-13);
  }
  EXPECT_NEAR(std::exp(table.log_partition_function()), partition_function(g, p),
              1e-10 * partition_function(g, p));
}

TEST(Correlation, GriffithsBoundsAndMonotonicity) {
  CorpusOptions options;
  options.count = 20;
  options.seed = 99;
  for (const auto& inst : random_corpus(options)) {
    const std::size_t n = inst.graph.num_vertices();
    double previous_beta = 0.0;
    std::vector<double> previous(n * n, 0.0);
    for (double beta : {0.1, 0.4, 0.9, 1.6}) {
      const GibbsTable table(inst.graph, {beta, 0.0});
      for (Vertex x = 0; x < n; ++x)
        for (Vertex y = 0; y < n; ++y) {
          const double s = table.s2(x, y);
          EXPECT_GE(s, 0.0);
          EXPECT_LE(s, 1.0 + 1e-15);
          if (previous_beta > 0.0) {
            EXPECT_GE(s, previous[x * n + y] - 1e-13) << "instance " << inst.index;
          }
          previous[x * n + y] = s;
        }
      previous_beta = beta;
    }
  }
}

TEST(Ursell, AllPointsEqual) {
  EXPECT_NEAR(ursell4(kEdge, {0.7, 0.0}, 0, 0, 0, 0), -2.0, 1e-14);
}

TEST(Ursell, IndependentSpins) {
  const CouplingGraph g = build_lattice({2, 3, 1.0, Boundary::Free});
  EXPECT_NEAR(ursell4(g, {0.0, 0.0}, 0, 2, 4, 8), 0.0, 1e-15);
}

TEST(Ursell, FourCycleMatchesCurrents) {
  const CouplingGraph cycle(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 0, 1.0}});
  const double beta = 0.5;
  const double u4 = ursell4(cycle, {beta, 0.0}, 0, 1, 2, 3);
  EXPECT_LE(u4, 0.0);
  const std::vector<Vertex> all{0, 1, 2, 3};
  const double s4 = constrained_sum(cycle, beta, all) / constrained_sum(cycle, beta, {});
  const std::vector<std::vector<Vertex>> sources{all, {}};
  const double p = replica_probability(cycle, beta, sources, [&](std::span<const Trace> t) {
    return interconnected(cycle, t[0].support | t[1].support, all) ? 1.0 : 0.0;
  });
  EXPECT_NEAR(u4, -2.0 * s4 * p, 1e-10 * std::abs(u4));
}

TEST(Ursell, NonPositiveAndPermutationInvariant) {
  CorpusOptions options;
  options.count = 25;
  options.seed = 5;
  options.min_vertices = 4;
  for (const auto& inst : random_corpus(options)) {
    const GibbsTable table(inst.graph, {inst.beta, 0.0});
    std::array<Vertex, 4> q{0, 1, 2, 3};
    const double base = table.ursell4(q[0], q[1], q[2], q[3]);
    EXPECT_LE(base, 1e-12) << "instance " << inst.index;
    std::sort(q.begin(), q.end());
    do {
      EXPECT_NEAR(table.ursell4(q[0], q[1], q[2], q[3]), base, 1e-13);
    } while (std::next_permutation(q.begin(), q.end()));
    EXPECT_NEAR(ursell4(inst.graph, {inst.beta, 0.0}, 0, 1, 2, 3), base, 1e-12);
  }
}

TEST(GibbsTable, LinearMomentsOfIndependentSpins) {
  const CouplingGraph g(4, {});
  const GibbsTable table(g, {1.0, 0.0});
  const std::vector<double> f(4, 1.0);
  const auto m = table.linear_moments(f, 4);
  EXPECT_NEAR(m[0], 1.0, 1e-15);
  EXPECT_NEAR(m[1], 0.0, 1e-15);
  EXPECT_NEAR(m[2], 4.0, 1e-13);
  EXPECT_NEAR(m[4], 3.0 * 16.0 - 2.0 * 4.0, 1e-12);
  EXPECT_NEAR(table.linear_mgf(f, 0.3), std::pow(std::cosh(0.3), 4), 1e-14);
}

TEST(Kahan, CompensatesSmallTerms) {
  KahanSum sum;
  sum.add(1.0);
  for (int i = 0; i < 1000; ++i) sum.add(1e-17);
  EXPECT_NEAR(sum.value() - 1.0, 1e-14, 2.3e-16);
}

}  // namespace
}  // namespace rcising
