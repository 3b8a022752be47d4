#include <gtest/gtest.h>

#include <cmath>

#include "rcising/currents.hpp"
#include "rcising/graph.hpp"
#include "rcising/gs_blocks.hpp"
#include "rcising/ising_exact.hpp"

namespace rcising {
namespace {

// <phi^k> for exp(-phi^4): Gamma((k+1)/4) / Gamma(1/4).
double quartic_moment(int k) { return std::tgamma((k + 1) / 4.0) / std::tgamma(0.25); }

// Plain trapezoid on [-8, 8] for exp(-lambda x^4 + b x^2).
double trapezoid_moment(double lambda, double b, int k) {
  const int n = 400'000;
  const double lo = -8.0, h = 16.0 / n;
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * h;
    const double w = (i == 0 || i == n ? 0.5 : 1.0) * std::exp(-lambda * std::pow(x, 4) + b * x * x);
    num += w * std::pow(x, k);
    den += w;
  }
  return num / den;
}

TEST(BlockPmf, SingleSpin) {
  const auto pmf = block_pmf({1, 0.7, 0.3});
  ASSERT_EQ(pmf.size(), 2u);
  EXPECT_DOUBLE_EQ(pmf[0].value, -0.7);
  EXPECT_DOUBLE_EQ(pmf[1].value, 0.7);
  EXPECT_DOUBLE_EQ(pmf[0].probability, 0.5);
  EXPECT_DOUBLE_EQ(pmf[1].probability, 0.5);
}

TEST(BlockPmf, TwoFairCoins) {
  const double alpha = 1.3;
  const auto pmf = block_pmf({2, alpha, 0.0});
  ASSERT_EQ(pmf.size(), 3u);
  EXPECT_NEAR(pmf[0].value, -std::sqrt(2.0) * alpha, 1e-15);
  EXPECT_EQ(pmf[1].value, 0.0);
  EXPECT_NEAR(pmf[2].value, std::sqrt(2.0) * alpha, 1e-15);
  EXPECT_NEAR(pmf[0].probability, 0.25, 1e-15);
  EXPECT_NEAR(pmf[1].probability, 0.5, 1e-15);
  EXPECT_NEAR(pmf[2].probability, 0.25, 1e-15);
}

TEST(BlockPmf, MeanFieldWeightMatchesEnumeration) {
  // N = 3: weights binomial(3,k) exp(g (2k-3)^2 / 3).
  const double g = 0.8;
  const auto pmf = block_pmf({3, 1.0, g});
  double z = 0.0;
  std::vector<double> w(4);
  for (int k = 0; k <= 3; ++k) {
    const double binom = k == 0 || k == 3 ? 1.0 : 3.0;
    w[k] = binom * std::exp(g * (2 * k - 3) * (2 * k - 3) / 3.0);
    z += w[k];
  }
  for (int k = 0; k <= 3; ++k) EXPECT_NEAR(pmf[k].probability, w[k] / z, 1e-14);
}

TEST(BlockPmf, NormalizedAndSymmetric) {
  for (std::size_t N : {1u, 2u, 7u, 64u, 1000u, 100'000u})
    for (double g : {0.0, 0.5, 1.0, 1.5}) {
      const auto pmf = block_pmf({N, 0.9, g});
      ASSERT_EQ(pmf.size(), N + 1);
      double total = 0.0;
      for (std::size_t k = 0; k <= N; ++k) {
        total += pmf[k].probability;
        EXPECT_EQ(pmf[k].probability, pmf[N - k].probability);
        EXPECT_EQ(pmf[k].value, -pmf[N - k].value);
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(BlockPmf, InvalidParametersRejected) {
  EXPECT_THROW(block_pmf({0, 1.0, 0.0}), GsError);
  EXPECT_THROW(block_pmf({4, 0.0, 0.0}), GsError);
  EXPECT_THROW(block_pmf({kMaxBlockSize + 1, 1.0, 0.0}), GsError);
}

TEST(BlockMoments, MatchPmf) {
  const BlockParams p{50, 0.8, 0.9};
  const auto pmf = block_pmf(p);
  const auto m = block_moments(p, 6);
  for (int j = 0; j <= 6; ++j) {
    double direct = 0.0;
    for (const auto& pt : pmf) direct += pt.probability * std::pow(pt.value, j);
    EXPECT_NEAR(m[j], direct, 1e-12 * std::max(1.0, std::abs(direct)));
  }
}

TEST(TargetMoments, QuarticClosedForm) {
  const auto m = target_moments({1.0, 0.0}, 8);
  EXPECT_NEAR(m[0], 1.0, 1e-14);
  for (int k : {1, 3, 5, 7}) EXPECT_EQ(m[k], 0.0);
  EXPECT_NEAR(m[4], 0.25, 1e-12);
  for (int k : {2, 4, 6, 8}) EXPECT_NEAR(m[k], quartic_moment(k), 1e-12 * quartic_moment(k));
}

TEST(TargetMoments, DoubleWellByTrapezoid) {
  for (auto [lambda, b] : {std::pair{1.0, 1.5}, std::pair{0.5, -1.0}, std::pair{2.0, 0.3}}) {
    const auto m = target_moments({lambda, b}, 6);
    for (int k : {2, 4, 6}) {
      const double expected = trapezoid_moment(lambda, b, k);
      EXPECT_NEAR(m[k], expected, 1e-9 * expected) << lambda << " " << b << " " << k;
    }
  }
}

TEST(TargetMoments, InvalidMeasureRejected) {
  EXPECT_THROW(target_moments({0.0, 1.0}, 4), GsError);
  EXPECT_THROW(target_moments({-1.0, 0.0}, 4), GsError);
}

TEST(Tune, SingleSpinCannotMatch) { EXPECT_THROW(tune(1, {1.0, 0.0}), GsError); }

TEST(Tune, MatchesSecondAndFourthMoments) {
  const TuneResult r = tune(1024, {1.0, 0.0});
  EXPECT_LE(r.residual, 1e-6);
  const auto block = block_moments(r.params, 4);
  EXPECT_NEAR(block[2], quartic_moment(2), 1e-6 * quartic_moment(2));
  EXPECT_NEAR(block[4], 0.25, 1e-6 * 0.25);
}

TEST(Tune, CouplingApproachesMeanFieldCriticality) {
  // exp((g/N) M^2) against the binomial entropy -N m^2 / 2 is critical at g = 1/2.
  const double critical = 0.5;
  double previous = 0.0;
  for (std::size_t N : {64u, 256u, 1024u}) {
    const TuneResult r = tune(N, {1.0, 0.0});
    EXPECT_GT(r.params.g, previous) << N;
    EXPECT_LT(std::abs(r.params.g - critical), std::abs(previous - critical)) << N;
    previous = r.params.g;
  }
  EXPECT_NEAR(previous, critical, 0.05);
}

TEST(Tune, SixthMomentConverges) {
  const double target = quartic_moment(6);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t N : {64u, 256u, 1024u, 4096u}) {
    const TuneResult r = tune(N, {1.0, 0.0});
    const double err = std::abs(block_moments(r.params, 6)[6] - target);
    EXPECT_LT(err, previous) << N;
    previous = err;
  }
}

TEST(Decorated, BlockCorrelationMatchesCurrents) {
  const CouplingGraph base(2, {{0, 1, 0.6}});
  const BlockParams p{2, 0.8, 0.7};
  const CouplingGraph g = build_decorated(base, p.N, p.alpha, p.g);
  const double beta = 0.9;
  const ThermoParams thermo{beta, 0.0};
  const double z = constrained_sum(g, beta, {});
  double from_spins = 0.0, from_currents = 0.0;
  for (Vertex i = 0; i < g.num_vertices(); ++i)
    for (Vertex j = 0; j < g.num_vertices(); ++j) {
      if (g.block_of()[i] != 0 || g.block_of()[j] != 1) continue;
      const std::array<Vertex, 2> pair{i, j};
      from_spins += correlation(g, thermo, pair);
      from_currents += constrained_sum(g, beta, pair) / z;
    }
  const double scale = p.alpha * p.alpha / static_cast<double>(p.N);
  EXPECT_NEAR(scale * from_spins, scale * from_currents, 1e-10 * scale * from_spins);
  EXPECT_GT(from_spins, 0.0);
}

}  // namespace
}  // namespace rcising
