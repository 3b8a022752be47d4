#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rcising {

/// Monte Carlo estimate with its binning error and provenance.
struct Estimate {
  double mean = 0.0;
  double error = 0.0;
  std::size_t bins = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

/// Means of `bins` consecutive equal-size bins. Trailing samples that do not
/// fill a bin are dropped. Throws when there are fewer samples than bins.
std::vector<double> bin_means(std::span<const double> samples, std::size_t bins);

/// Mean and standard error from the spread of bin means.
Estimate binned_estimate(std::span<const double> samples, std::size_t bins,
                         std::uint64_t seed = 0);

/// Function of the means of several series of equal length.
using MeanFunction = std::function<double(std::span<const double>)>;

/// f(sample means) with a leave-one-bin-out jackknife error.
Estimate jackknife_estimate(const std::vector<std::span<const double>>& series, std::size_t bins,
                            const MeanFunction& f, std::uint64_t seed = 0);

/// Jackknife over precomputed bin means: series[s][b] is the mean of series s in bin b.
Estimate jackknife_from_bins(const std::vector<std::vector<double>>& bin_table,
                             const MeanFunction& f, std::size_t samples = 0,
                             std::uint64_t seed = 0);

/// Ordinary least-squares line y = intercept + slope x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace rcising
