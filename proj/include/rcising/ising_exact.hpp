#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rcising/graph.hpp"

namespace rcising {

struct ThermoParams {
  double beta = 0.0;
  double h = 0.0;
};

/// Largest |V| accepted by the brute-force spin sums.
inline constexpr std::size_t kExactSpinCap = 24;
/// Largest |V| for which GibbsTable keeps all 2^|V| probabilities in memory.
inline constexpr std::size_t kGibbsTableCap = 22;

class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Neumaier-compensated running sum.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Z = sum over sigma of exp(-beta H(sigma)), H = -sum J s s - h sum s.
double partition_function(const CouplingGraph& graph, const ThermoParams& params,
                          std::size_t cap = kExactSpinCap);

/// <prod_{x in A} sigma_x> for a multiset A (repeated vertices cancel pairwise).
double correlation(const CouplingGraph& graph, const ThermoParams& params,
                   std::span<const Vertex> A, std::size_t cap = kExactSpinCap);

/// Several correlations from a single enumeration sweep.
std::vector<double> correlations(const CouplingGraph& graph, const ThermoParams& params,
                                 std::span<const std::vector<Vertex>> sets,
                                 std::size_t cap = kExactSpinCap);

/// S4 - [S12 S34 + S13 S24 + S14 S23].
double ursell4(const CouplingGraph& graph, const ThermoParams& params, Vertex x1, Vertex x2,
               Vertex x3, Vertex x4, std::size_t cap = kExactSpinCap);

/// Normalized Gibbs probabilities of every spin configuration of a small graph.
///
/// Configuration bit i set means sigma_i = -1. Intended for repeated queries
/// (all pair correlations, block moments, moment generating functions) on
/// graphs up to kGibbsTableCap sites.
class GibbsTable {
 public:
  GibbsTable(const CouplingGraph& graph, const ThermoParams& params,
             std::size_t cap = kGibbsTableCap);

  std::size_t num_vertices() const { return n_; }
  double log_partition_function() const { return log_z_; }
  std::span<const double> probabilities() const { return prob_; }

  double correlation(std::span<const Vertex> A) const;
  double correlation_mask(std::uint64_t mask) const;
  double s2(Vertex x, Vertex y) const;
  double ursell4(Vertex x1, Vertex x2, Vertex x3, Vertex x4) const;
  /// Full |V| x |V| matrix of two-point functions, row-major.
  std::vector<double> s2_matrix() const;

  /// <(sum_x f_x sigma_x)^k> for k = 0..max_order.
  std::vector<double> linear_moments(std::span<const double> f, int max_order) const;
  /// <exp(z sum_x f_x sigma_x)>.
  double linear_mgf(std::span<const double> f, double z) const;

 private:
  std::size_t n_ = 0;
  double log_z_ = 0.0;
  bool symmetric_ = true;
  std::vector<double> prob_;
};

}  // namespace rcising
