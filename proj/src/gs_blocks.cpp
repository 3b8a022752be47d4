#include "rcising/gs_blocks.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace rcising {

namespace {

void validate(const BlockParams& p) {
  if (p.N < 1) throw GsError("block size N must be at least 1");
  if (p.N > kMaxBlockSize) throw GsError("block size N exceeds " + std::to_string(kMaxBlockSize));
  if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) throw GsError("alpha must be positive");
  if (!(p.g >= 0.0) || !std::isfinite(p.g)) throw GsError("g must be non-negative");
}

/// Moments of the block variable at alpha = 1.
std::vector<double> unit_moments(std::size_t N, double g, int max_order) {
  BlockParams p{N, 1.0, g};
  return block_moments(p, max_order);
}

}  // namespace

std::vector<BlockPoint> block_pmf(const BlockParams& params) {
  validate(params);
  const std::size_t N = params.N;
  const double n = static_cast<double>(N);
  const double scale = params.alpha / std::sqrt(n);
  const double log_n_fact = std::lgamma(n + 1.0);
  // Log-weights for k <= N/2; the upper half mirrors them exactly.
  const std::size_t half = N / 2;
  std::vector<double> log_w(half + 1);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= half; ++k) {
    const double kk = static_cast<double>(k);
    const double m = 2.0 * kk - n;
    log_w[k] = log_n_fact - std::lgamma(kk + 1.0) - std::lgamma(n - kk + 1.0) + params.g / n * m * m;
    max_log = std::max(max_log, log_w[k]);
  }
  std::vector<double> w(N + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    w[k] = std::exp(log_w[k] - max_log);
    w[N - k] = w[k];
  }
  // Pairwise-symmetric summation keeps the normalization exact to rounding.
  double total = 0.0;
  for (std::size_t k = 0; 2 * k < N; ++k) total += 2.0 * w[k];
  if (N % 2 == 0) total += w[half];
  std::vector<BlockPoint> out(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    const double value = scale * (2.0 * static_cast<double>(k) - n);
    out[k] = {value, w[k] / total};
  }
  return out;
}

std::vector<double> block_moments(const BlockParams& params, int max_order) {
  if (max_order < 0) throw GsError("moment order must be non-negative");
  const auto pmf = block_pmf(params);
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1, 0.0);
  for (const auto& [value, prob] : pmf) {
    double power = prob;
    for (int j = 0; j <= max_order; ++j) {
      out[static_cast<std::size_t>(j)] += power;
      power *= value;
    }
  }
  for (int j = 1; j <= max_order; j += 2) out[static_cast<std::size_t>(j)] = 0.0;
  return out;
}

std::vector<double> target_moments(const TargetMeasure& target, int max_order) {
  const double lambda = target.lambda, b = target.b;
  if (!std::isfinite(lambda) || !std::isfinite(b) || lambda < 0.0 || (lambda == 0.0 && b >= 0.0))
    throw GsError("target measure is not normalizable (need lambda > 0, or lambda = 0 and b < 0)");
  if (max_order < 0) throw GsError("moment order must be non-negative");
  // Subtract the maximum of the exponent to keep the integrand O(1).
  const double peak = (b > 0.0 && lambda > 0.0) ? b * b / (4.0 * lambda) : 0.0;
  boost::math::quadrature::exp_sinh<double> integrator;
  auto integrate_power = [&](int j) {
    auto f = [&](double x) {
      if (x <= 0.0) return j == 0 ? std::exp(-peak) : 0.0;
      const double x2 = x * x;
      // Combined exponent avoids inf * 0 in the tail.
      return std::exp(j * std::log(x) - lambda * x2 * x2 + b * x2 - peak);
    };
    return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
  };
  const double norm = integrate_power(0);
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1, 0.0);
  out[0] = 1.0;
  for (int j = 2; j <= max_order; j += 2) out[static_cast<std::size_t>(j)] = integrate_power(j) / norm;
  return out;
}

TuneResult tune(std::size_t N, const TargetMeasure& target, int max_iterations) {
  if (target.lambda <= 0.0) throw GsError("tuning needs lambda > 0");
  if (N < 1 || N > kMaxBlockSize) throw GsError("block size out of range");
  const auto moments = target_moments(target, 4);
  const double m2 = moments[2], m4 = moments[4];
  const double kurtosis_target = m4 / (m2 * m2);

  auto excess = [&](double g) {
    const auto m = unit_moments(N, g, 4);
    return m[4] / (m[2] * m[2]) - kurtosis_target;
  };
  // Kurtosis falls from 3 - 2/N at g = 0 towards 1 as g grows.
  double lo = 0.0;
  double f_lo = excess(lo);
  if (!(f_lo > 0.0))
    throw GsError("tuning did not converge: block size " + std::to_string(N) +
                  " cannot reach the target kurtosis " + std::to_string(kurtosis_target));
  double hi = 1.0;
  double f_hi = excess(hi);
  int expansions = 0;
  while (f_hi > 0.0) {
    lo = hi;
    f_lo = f_hi;
    hi *= 2.0;
    f_hi = excess(hi);
    if (++expansions > 60)
      throw GsError("tuning did not converge: no sign change of the kurtosis mismatch");
  }
  boost::uintmax_t iterations = static_cast<boost::uintmax_t>(max_iterations);
  const auto bracket = boost::math::tools::toms748_solve(
      excess, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), iterations);
  if (iterations >= static_cast<boost::uintmax_t>(max_iterations))
    throw GsError("tuning did not converge within " + std::to_string(max_iterations) +
                  " iterations");
  const double g = 0.5 * (bracket.first + bracket.second);
  const auto unit = unit_moments(N, g, 4);
  TuneResult out;
  out.params = BlockParams{N, std::sqrt(m2 / unit[2]), g};
  out.iterations = static_cast<int>(iterations);
  const auto tuned = block_moments(out.params, 4);
  out.residual = std::max(std::abs(tuned[2] - m2) / m2, std::abs(tuned[4] - m4) / m4);
  return out;
}

}  // namespace rcising
