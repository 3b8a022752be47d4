#include "rcising/stats.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rcising {

std::vector<double> bin_means(std::span<const double> samples, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("bin count must be positive");
  if (samples.size() < bins)
    throw std::invalid_argument("need at least one sample per bin: " +
                                std::to_string(samples.size()) + " samples, " +
                                std::to_string(bins) + " bins");
  const std::size_t per_bin = samples.size() / bins;
  std::vector<double> means(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < per_bin; ++i) s += samples[b * per_bin + i];
    means[b] = s / static_cast<double>(per_bin);
  }
  return means;
}

Estimate binned_estimate(std::span<const double> samples, std::size_t bins, std::uint64_t seed) {
  const auto means = bin_means(samples, bins);
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(bins);
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  const double nb = static_cast<double>(bins);
  Estimate out;
  out.mean = mean;
  out.error = bins > 1 ? std::sqrt(var / (nb * (nb - 1.0))) : 0.0;
  out.bins = bins;
  out.samples = (samples.size() / bins) * bins;
  out.seed = seed;
  return out;
}

Estimate jackknife_from_bins(const std::vector<std::vector<double>>& bin_table,
                             const MeanFunction& f, std::size_t samples, std::uint64_t seed) {
  if (bin_table.empty()) throw std::invalid_argument("jackknife needs at least one series");
  const std::size_t bins = bin_table.front().size();
  for (const auto& s : bin_table)
    if (s.size() != bins) throw std::invalid_argument("jackknife series differ in bin count");
  if (bins < 2) throw std::invalid_argument("jackknife needs at least two bins");

  const std::size_t k = bin_table.size();
  std::vector<double> totals(k, 0.0);
  for (std::size_t s = 0; s < k; ++s)
    for (double v : bin_table[s]) totals[s] += v;
  const double nb = static_cast<double>(bins);
  std::vector<double> means(k);
  for (std::size_t s = 0; s < k; ++s) means[s] = totals[s] / nb;

  Estimate out;
  out.mean = f(means);
  std::vector<double> leave_out(k);
  std::vector<double> values(bins);
  double avg = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    for (std::size_t s = 0; s < k; ++s) leave_out[s] = (totals[s] - bin_table[s][b]) / (nb - 1.0);
    values[b] = f(leave_out);
    avg += values[b];
  }
  avg /= nb;
  double var = 0.0;
  for (double v : values) var += (v - avg) * (v - avg);
  out.error = std::sqrt(var * (nb - 1.0) / nb);
  out.bins = bins;
  out.samples = samples;
  out.seed = seed;
  return out;
}

Estimate jackknife_estimate(const std::vector<std::span<const double>>& series, std::size_t bins,
                            const MeanFunction& f, std::uint64_t seed) {
  if (series.empty()) throw std::invalid_argument("jackknife needs at least one series");
  std::vector<std::vector<double>> table;
  table.reserve(series.size());
  for (const auto& s : series) {
    if (s.size() != series.front().size())
      throw std::invalid_argument("jackknife series differ in length");
    table.push_back(bin_means(s, bins));
  }
  return jackknife_from_bins(table, f, (series.front().size() / bins) * bins, seed);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("line fit needs at least two matching points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("line fit needs distinct abscissae");
  LineFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  return out;
}

}  // namespace rcising
