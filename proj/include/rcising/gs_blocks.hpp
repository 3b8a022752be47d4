#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rcising {

class GsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Block variable phi = (alpha / sqrt(N)) sum_j sigma_j of N Ising spins with
/// mean-field weight exp((g / N) (sum_j sigma_j)^2).
struct BlockParams {
  std::size_t N = 1;
  double alpha = 1.0;
  double g = 0.0;
};

/// Density proportional to exp(-lambda phi^4 + b phi^2).
struct TargetMeasure {
  double lambda = 1.0;
  double b = 0.0;
};

inline constexpr std::size_t kMaxBlockSize = 10'000'000;

struct BlockPoint {
  double value;
  double probability;
};

/// N+1 support points phi_k = (alpha/sqrt(N))(2k - N), k = 0..N, ascending.
/// Exactly symmetric and normalized.
std::vector<BlockPoint> block_pmf(const BlockParams& params);

/// <phi^j> for j = 0..max_order under block_pmf.
std::vector<double> block_moments(const BlockParams& params, int max_order);

/// <phi^j> for j = 0..max_order of the continuum density; odd moments are 0.
std::vector<double> target_moments(const TargetMeasure& target, int max_order);

struct TuneResult {
  BlockParams params;
  /// max over j in {2, 4} of |<phi^j>_block - <phi^j>_target| / <phi^j>_target.
  double residual = 0.0;
  int iterations = 0;
};

/// (alpha, g) matching the second and fourth target moments. The kurtosis
/// <phi^4>/<phi^2>^2 does not depend on alpha, so g is found first by a
/// bracketed root search and alpha follows from the second moment. Throws
/// GsError when no g reproduces the target kurtosis (always for N = 1).
TuneResult tune(std::size_t N, const TargetMeasure& target, int max_iterations = 200);

}  // namespace rcising
