#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "rcising/graph.hpp"

namespace rcising {

class PfaffianError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense antisymmetric matrix. Only set() writes, and it keeps A(j,i) = -A(i,j).
class AntisymmetricMatrix {
 public:
  explicit AntisymmetricMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {}

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
  void set(std::size_t i, std::size_t j, double value);
  std::span<const double> data() const { return data_; }

 private:
  std::size_t dim_;
  std::vector<double> data_;
};

/// Largest dimension evaluated by the explicit pairing expansion.
inline constexpr std::size_t kPairingExpansionMaxDim = 8;

/// Pf(A). Pairing expansion up to kPairingExpansionMaxDim, pivoted skew
/// elimination beyond. Throws on odd dimension.
double pfaffian(const AntisymmetricMatrix& matrix);
double pfaffian_expansion(const AntisymmetricMatrix& matrix);
double pfaffian_elimination(const AntisymmetricMatrix& matrix);

/// Fixed-point-free involution on {0, ..., 2n-1}: partner[j] is paired with j.
struct Pairing {
  std::vector<std::size_t> partner;
};

void validate_pairing(const Pairing& pairing);
/// All (2n-1)!! pairings in lexicographic order of their chord lists.
std::vector<Pairing> all_pairings(std::size_t num_points);

/// (-1)^(number of crossing chord pairs) with chords drawn inside the cycle on
/// which points sit at the given positions (cyclic order = numeric order).
int crossing_sign(std::span<const double> positions, const Pairing& pairing);

struct BoundaryPfaffian {
  double correlation = 0.0;  ///< S_2n of the points
  double pfaffian = 0.0;     ///< signed pairing sum of two-point functions
  double residual = 0.0;     ///< |correlation - pfaffian|
  std::vector<Vertex> ordered_points;
};

/// Compares S_2n with the Pfaffian of pair correlations for points on the
/// marked boundary face. Points are ordered by their position along the face.
BoundaryPfaffian boundary_pfaffian(const CouplingGraph& graph, double beta,
                                   std::span<const Vertex> points);
double boundary_pfaffian_residual(const CouplingGraph& graph, double beta,
                                  std::span<const Vertex> points);

}  // namespace rcising
