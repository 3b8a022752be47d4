#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "rcising/rng.hpp"
#include "rcising/stats.hpp"

namespace rcising {
namespace {

TEST(Philox, KnownAnswerVectors) {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}),
            (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                              K{0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                              K{0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterRng, ReproducibleAndStreamSeparated) {
  CounterRng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    seen.insert(x);
    seen.insert(c());
    seen.insert(d());
  }
  EXPECT_EQ(seen.size(), 3000u);
  EXPECT_EQ(a.seed(), 42u);
  EXPECT_EQ(a.stream(), 7u);
}

TEST(CounterRng, UniformMomentsAndRange) {
  CounterRng rng(1, 0);
  const int n = 200'000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sum2 += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sum2 / n, 1.0 / 3.0, 5 * std::sqrt(4.0 / 45 / n));
}

TEST(CounterRng, BelowIsUnbiased) {
  CounterRng rng(9, 2);
  std::vector<int> counts(7, 0);
  const int n = 70'000;
  for (int i = 0; i < n; ++i) {
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += std::pow(c - n / 7.0, 2) / (n / 7.0);
  EXPECT_LT(chi2, 22.5);  // 0.999 quantile of chi^2 with 6 degrees of freedom
  EXPECT_EQ(rng.below(1), 0u);
}

TEST(Binning, MeansAndErrorOfConstantSeries) {
  const std::vector<double> ones(100, 1.0);
  const Estimate e = binned_estimate(ones, 10, 5);
  EXPECT_DOUBLE_EQ(e.mean, 1.0);
  EXPECT_DOUBLE_EQ(e.error, 0.0);
  EXPECT_EQ(e.bins, 10u);
  EXPECT_EQ(e.samples, 100u);
  EXPECT_EQ(e.seed, 5u);
}

TEST(Binning, BinMeansDropTail) {
  std::vector<double> x(23);
  std::iota(x.begin(), x.end(), 0.0);
  const auto means = bin_means(x, 4);
  ASSERT_EQ(means.size(), 4u);
  EXPECT_DOUBLE_EQ(means[0], 2.0);
  EXPECT_DOUBLE_EQ(means[3], 17.0);
}

TEST(Binning, ErrorMatchesIndependentSamples) {
  CounterRng rng(3, 0);
  std::vector<double> x(64'000);
  for (double& v : x) v = rng.uniform();
  const Estimate e = binned_estimate(x, 32);
  const double expected = std::sqrt(1.0 / 12.0 / x.size());
  EXPECT_NEAR(e.error, expected, 0.35 * expected);
  EXPECT_NEAR(e.mean, 0.5, 5 * expected);
}

TEST(Binning, CapturesAutocorrelation) {
  // AR(1) chain with rho = 0.9: integrated time inflates the naive error by sqrt(19).
  CounterRng rng(4, 0);
  std::vector<double> x(200'000);
  double v = 0.0;
  for (double& s : x) {
    v = 0.9 * v + (rng.uniform() - 0.5);
    s = v;
  }
  const Estimate binned = binned_estimate(x, 20);
  double mean = 0.0, var = 0.0;
  for (double s : x) mean += s;
  mean /= x.size();
  for (double s : x) var += (s - mean) * (s - mean);
  var /= x.size() - 1;
  const double naive = std::sqrt(var / x.size());
  EXPECT_GT(binned.error / naive, 0.6 * std::sqrt(19.0));
  EXPECT_LT(binned.error / naive, 1.6 * std::sqrt(19.0));
}

TEST(Jackknife, LinearFunctionMatchesBinning) {
  CounterRng rng(6, 0);
  std::vector<double> x(4000);
  for (double& v : x) v = rng.uniform();
  const Estimate direct = binned_estimate(x, 20);
  const Estimate jack =
      jackknife_estimate({x}, 20, [](std::span<const double> m) { return 2.0 * m[0]; });
  EXPECT_NEAR(jack.mean, 2.0 * direct.mean, 1e-12);
  EXPECT_NEAR(jack.error, 2.0 * direct.error, 1e-12);
}

TEST(Jackknife, RatioOfMeans) {
  const std::vector<std::vector<double>> bins{{1, 2, 3, 4}, {2, 2, 2, 2}};
  const Estimate e = jackknife_from_bins(bins, [](std::span<const double> m) { return m[0] / m[1]; });
  EXPECT_NEAR(e.mean, 1.25, 1e-14);
  // Leave-one-out values (3, 8/3, 7/3, 2) / 2, spread times sqrt(3/4 * sum of squares).
  const std::vector<double> loo{1.5, 4.0 / 3.0, 7.0 / 6.0, 1.0};
  const double avg = std::accumulate(loo.begin(), loo.end(), 0.0) / 4.0;
  double ss = 0.0;
  for (double v : loo) ss += (v - avg) * (v - avg);
  EXPECT_NEAR(e.error, std::sqrt(0.75 * ss), 1e-14);
}

TEST(Jackknife, RejectsBadInput) {
  EXPECT_THROW(jackknife_from_bins({}, [](std::span<const double>) { return 0.0; }),
               std::invalid_argument);
  EXPECT_THROW(jackknife_from_bins({{1.0}}, [](std::span<const double>) { return 0.0; }),
               std::invalid_argument);
  EXPECT_THROW(jackknife_from_bins({{1.0, 2.0}, {1.0}}, [](std::span<const double>) { return 0.0; }),
               std::invalid_argument);
}

TEST(FitLine, ExactLine) {
  const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
  const LineFit f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_THROW(fit_line(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
}

}  // namespace
}  // namespace rcising
