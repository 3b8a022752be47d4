#include "rcising/pfaffian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rcising/ising_exact.hpp"

namespace rcising {

void AntisymmetricMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i >= dim_ || j >= dim_) throw std::out_of_range("antisymmetric matrix index out of range");
  if (i == j) {
    if (value != 0.0) throw PfaffianError("antisymmetric matrix must have zero diagonal");
    return;
  }
  data_[i * dim_ + j] = value;
  data_[j * dim_ + i] = -value;
}

namespace {

void require_even(std::size_t dim) {
  if (dim % 2 != 0)
    throw PfaffianError("Pfaffian needs an even dimension, got " + std::to_string(dim));
}

double expand(const AntisymmetricMatrix& a, std::vector<std::size_t>& rest) {
  if (rest.empty()) return 1.0;
  const std::size_t first = rest.front();
  double total = 0.0;
  double sign = 1.0;
  for (std::size_t k = 1; k < rest.size(); ++k) {
    const std::size_t other = rest[k];
    std::vector<std::size_t> sub;
    sub.reserve(rest.size() - 2);
    for (std::size_t m = 1; m < rest.size(); ++m)
      if (m != k) sub.push_back(rest[m]);
    const double entry = a(first, other);
    if (entry != 0.0) total += sign * entry * expand(a, sub);
    sign = -sign;
  }
  return total;
}

}  // namespace

double pfaffian_expansion(const AntisymmetricMatrix& matrix) {
  require_even(matrix.dim());
  std::vector<std::size_t> all(matrix.dim());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return expand(matrix, all);
}

double pfaffian_elimination(const AntisymmetricMatrix& matrix) {
  const std::size_t n = matrix.dim();
  require_even(n);
  std::vector<double> a(matrix.data().begin(), matrix.data().end());
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  double result = 1.0;
  std::vector<double> tau(n);
  for (std::size_t k = 0; k + 1 < n; k += 2) {
    std::size_t pivot = k + 1;
    for (std::size_t i = k + 2; i < n; ++i)
      if (std::abs(at(i, k)) > std::abs(at(pivot, k))) pivot = i;
    if (pivot != k + 1) {
      for (std::size_t j = 0; j < n; ++j) std::swap(at(k + 1, j), at(pivot, j));
      for (std::size_t i = 0; i < n; ++i) std::swap(at(i, k + 1), at(i, pivot));
      result = -result;
    }
    const double head = at(k, k + 1);
    if (head == 0.0) return 0.0;
    result *= head;
    for (std::size_t j = k + 2; j < n; ++j) tau[j] = at(k, j) / head;
    for (std::size_t i = k + 2; i < n; ++i)
      for (std::size_t j = k + 2; j < n; ++j)
        at(i, j) += tau[i] * at(j, k + 1) - at(i, k + 1) * tau[j];
  }
  return result;
}

double pfaffian(const AntisymmetricMatrix& matrix) {
  require_even(matrix.dim());
  return matrix.dim() <= kPairingExpansionMaxDim ? pfaffian_expansion(matrix)
                                                 : pfaffian_elimination(matrix);
}

void validate_pairing(const Pairing& pairing) {
  const auto& p = pairing.partner;
  if (p.size() % 2 != 0) throw PfaffianError("pairing needs an even number of points");
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] >= p.size()) throw PfaffianError("pairing partner out of range");
    if (p[j] == j) throw PfaffianError("pairing has a fixed point at " + std::to_string(j));
    if (p[p[j]] != j) throw PfaffianError("pairing is not an involution");
  }
}

std::vector<Pairing> all_pairings(std::size_t num_points) {
  if (num_points % 2 != 0) throw PfaffianError("pairings need an even number of points");
  std::vector<Pairing> out;
  Pairing current{std::vector<std::size_t>(num_points, num_points)};
  auto recurse = [&](auto&& self) -> void {
    std::size_t first = 0;
    while (first < num_points && current.partner[first] != num_points) ++first;
    if (first == num_points) {
      out.push_back(current);
      return;
    }
    for (std::size_t other = first + 1; other < num_points; ++other) {
      if (current.partner[other] != num_points) continue;
      current.partner[first] = other;
      current.partner[other] = first;
      self(self);
      current.partner[first] = num_points;
      current.partner[other] = num_points;
    }
  };
  recurse(recurse);
  return out;
}

int crossing_sign(std::span<const double> positions, const Pairing& pairing) {
  validate_pairing(pairing);
  const auto& p = pairing.partner;
  if (positions.size() != p.size())
    throw PfaffianError("crossing_sign: one position per point is required");
  std::vector<double> sorted(positions.begin(), positions.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw PfaffianError("crossing_sign: duplicate boundary positions");

  int crossings = 0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] < a) continue;
    const double lo = std::min(positions[a], positions[p[a]]);
    const double hi = std::max(positions[a], positions[p[a]]);
    for (std::size_t c = a + 1; c < p.size(); ++c) {
      if (p[c] < c || c == p[a]) continue;
      const bool c_in = positions[c] > lo && positions[c] < hi;
      const bool d_in = positions[p[c]] > lo && positions[p[c]] < hi;
      if (c_in != d_in) ++crossings;
    }
  }
  return crossings % 2 == 0 ? 1 : -1;
}

BoundaryPfaffian boundary_pfaffian(const CouplingGraph& graph, double beta,
                                   std::span<const Vertex> points) {
  if (!graph.has_boundary_face()) throw PfaffianError("graph has no marked boundary face");
  if (points.empty() || points.size() % 2 != 0)
    throw PfaffianError("boundary Pfaffian needs a positive even number of points");
  const auto face = graph.boundary_face();
  std::vector<std::pair<std::size_t, Vertex>> located;
  for (Vertex v : points) {
    const auto it = std::find(face.begin(), face.end(), v);
    if (it == face.end())
      throw PfaffianError("point " + std::to_string(v) + " is not on the marked boundary face");
    located.emplace_back(static_cast<std::size_t>(it - face.begin()), v);
  }
  std::sort(located.begin(), located.end());
  for (std::size_t i = 1; i < located.size(); ++i)
    if (located[i].first == located[i - 1].first)
      throw PfaffianError("boundary points must be distinct");

  BoundaryPfaffian out;
  for (const auto& [pos, v] : located) out.ordered_points.push_back(v);
  const std::size_t m = out.ordered_points.size();

  std::vector<std::vector<Vertex>> sets{out.ordered_points};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      sets.push_back({out.ordered_points[i], out.ordered_points[j]});
  const auto values = correlations(graph, ThermoParams{beta, 0.0}, sets);

  AntisymmetricMatrix pair_matrix(m);
  std::size_t idx = 1;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) pair_matrix.set(i, j, values[idx++]);
  out.correlation = values[0];
  out.pfaffian = pfaffian(pair_matrix);
  out.residual = std::abs(out.correlation - out.pfaffian);
  return out;
}

double boundary_pfaffian_residual(const CouplingGraph& graph, double beta,
                                  std::span<const Vertex> points) {
  return boundary_pfaffian(graph, beta, points).residual;
}

}  // namespace rcising
