#include "rcising/ising_exact.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace rcising {

namespace {

void check_cap(const CouplingGraph& graph, std::size_t cap) {
  if (cap > 63) cap = 63;
  if (graph.num_vertices() > cap)
    throw CapExceeded("exact enumeration cap exceeded: |V| = " +
                      std::to_string(graph.num_vertices()) + " > " + std::to_string(cap));
}

/// -beta H of a configuration (bit set = spin down), recomputed from scratch.
double log_weight(const CouplingGraph& graph, const ThermoParams& p, std::uint64_t config) {
  double s = 0.0;
  for (const Edge& e : graph.edges()) {
    const bool anti = (((config >> e.u) ^ (config >> e.v)) & 1u) != 0;
    s += anti ? -e.J : e.J;
  }
  if (p.h != 0.0) {
    const int down = std::popcount(config);
    s += p.h * (static_cast<double>(graph.num_vertices()) - 2.0 * down);
  }
  return p.beta * s;
}

/// Upper bound on -beta H used to keep every weight <= 1.
double log_weight_shift(const CouplingGraph& graph, const ThermoParams& p) {
  double s = 0.0;
  for (const Edge& e : graph.edges()) s += e.J;
  s += std::abs(p.h) * static_cast<double>(graph.num_vertices());
  return p.beta * s;
}

/// Gray-code sweep over all configurations; visit(config, weight) with
/// weight = exp(-beta H - shift). The energy is updated incrementally and
/// refreshed from scratch every 4096 steps.
template <class Visitor>
void enumerate_configurations(const CouplingGraph& graph, const ThermoParams& p, double shift,
                              Visitor&& visit) {
  const std::size_t n = graph.num_vertices();
  const std::uint64_t count = std::uint64_t{1} << n;
  std::uint64_t config = 0;
  double lw = log_weight(graph, p, 0);
  visit(config, std::exp(lw - shift));
  for (std::uint64_t k = 1; k < count; ++k) {
    const int v = std::countr_zero(k);
    const double s_v = ((config >> v) & 1u) ? -1.0 : 1.0;
    double field = p.h;
    for (const Incidence& inc : graph.neighbors(static_cast<Vertex>(v))) {
      const double s_u = ((config >> inc.neighbor) & 1u) ? -1.0 : 1.0;
      field += graph.edge(inc.edge).J * s_u;
    }
    config ^= std::uint64_t{1} << v;
    if ((k & 4095u) == 0)
      lw = log_weight(graph, p, config);
    else
      lw -= 2.0 * p.beta * s_v * field;
    visit(config, std::exp(lw - shift));
  }
}

std::uint64_t parity_mask(std::span<const Vertex> A, std::size_t n) {
  std::uint64_t mask = 0;
  for (Vertex v : A) {
    if (v >= n) throw std::out_of_range("vertex id out of range");
    mask ^= std::uint64_t{1} << v;
  }
  return mask;
}

inline double sign_of(std::uint64_t config, std::uint64_t mask) {
  return (std::popcount(config & mask) & 1) ? -1.0 : 1.0;
}

}  // namespace

double partition_function(const CouplingGraph& graph, const ThermoParams& params,
                          std::size_t cap) {
  check_cap(graph, cap);
  const double shift = log_weight_shift(graph, params);
  KahanSum z;
  enumerate_configurations(graph, params, shift, [&](std::uint64_t, double w) { z.add(w); });
  return std::exp(shift) * z.value();
}

std::vector<double> correlations(const CouplingGraph& graph, const ThermoParams& params,
                                 std::span<const std::vector<Vertex>> sets, std::size_t cap) {
  check_cap(graph, cap);
  std::vector<std::uint64_t> masks;
  masks.reserve(sets.size());
  for (const auto& s : sets) masks.push_back(parity_mask(s, graph.num_vertices()));
  const double shift = log_weight_shift(graph, params);
  KahanSum z;
  std::vector<KahanSum> acc(masks.size());
  enumerate_configurations(graph, params, shift, [&](std::uint64_t config, double w) {
    z.add(w);
    for (std::size_t i = 0; i < masks.size(); ++i) acc[i].add(sign_of(config, masks[i]) * w);
  });
  std::vector<double> out(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (params.h == 0.0 && (sets[i].size() % 2) == 1)
      out[i] = 0.0;
    else if (masks[i] == 0)
      out[i] = 1.0;
    else
      out[i] = acc[i].value() / z.value();
  }
  return out;
}

double correlation(const CouplingGraph& graph, const ThermoParams& params,
                   std::span<const Vertex> A, std::size_t cap) {
  std::vector<Vertex> set(A.begin(), A.end());
  return correlations(graph, params, std::span<const std::vector<Vertex>>(&set, 1), cap)[0];
}

double ursell4(const CouplingGraph& graph, const ThermoParams& params, Vertex x1, Vertex x2,
               Vertex x3, Vertex x4, std::size_t cap) {
  const std::vector<std::vector<Vertex>> sets{{x1, x2, x3, x4}, {x1, x2}, {x3, x4},
                                              {x1, x3},         {x2, x4}, {x1, x4},
                                              {x2, x3}};
  auto c = correlations(graph, params, sets, cap);
  return c[0] - (c[1] * c[2] + c[3] * c[4] + c[5] * c[6]);
}

GibbsTable::GibbsTable(const CouplingGraph& graph, const ThermoParams& params, std::size_t cap)
    : n_(graph.num_vertices()), symmetric_(params.h == 0.0) {
  check_cap(graph, std::min(cap, kGibbsTableCap));
  const double shift = log_weight_shift(graph, params);
  prob_.assign(std::size_t{1} << n_, 0.0);
  KahanSum z;
  enumerate_configurations(graph, params, shift, [&](std::uint64_t config, double w) {
    prob_[config] = w;
    z.add(w);
  });
  const double total = z.value();
  for (double& p : prob_) p /= total;
  log_z_ = shift + std::log(total);
}

double GibbsTable::correlation_mask(std::uint64_t mask) const {
  if (mask == 0) return 1.0;
  if (symmetric_ && (std::popcount(mask) & 1)) return 0.0;
  KahanSum acc;
  for (std::size_t c = 0; c < prob_.size(); ++c) acc.add(sign_of(c, mask) * prob_[c]);
  return acc.value();
}

double GibbsTable::correlation(std::span<const Vertex> A) const {
  if (symmetric_ && (A.size() % 2) == 1) return 0.0;
  return correlation_mask(parity_mask(A, n_));
}

double GibbsTable::s2(Vertex x, Vertex y) const {
  const Vertex pair[2] = {x, y};
  return correlation(pair);
}

double GibbsTable::ursell4(Vertex x1, Vertex x2, Vertex x3, Vertex x4) const {
  const Vertex quad[4] = {x1, x2, x3, x4};
  return correlation(quad) -
         (s2(x1, x2) * s2(x3, x4) + s2(x1, x3) * s2(x2, x4) + s2(x1, x4) * s2(x2, x3));
}

std::vector<double> GibbsTable::s2_matrix() const {
  std::vector<double> m(n_ * n_, 0.0);
  for (std::size_t x = 0; x < n_; ++x) {
    m[x * n_ + x] = 1.0;
    for (std::size_t y = x + 1; y < n_; ++y) {
      const double v = s2(static_cast<Vertex>(x), static_cast<Vertex>(y));
      m[x * n_ + y] = v;
      m[y * n_ + x] = v;
    }
  }
  return m;
}

std::vector<double> GibbsTable::linear_moments(std::span<const double> f, int max_order) const {
  if (f.size() != n_) throw std::invalid_argument("linear_moments: f must have |V| entries");
  std::vector<KahanSum> acc(max_order + 1);
  for (std::size_t c = 0; c < prob_.size(); ++c) {
    double m = 0.0;
    for (std::size_t x = 0; x < n_; ++x) m += ((c >> x) & 1u) ? -f[x] : f[x];
    double power = prob_[c];
    for (int k = 0; k <= max_order; ++k) {
      acc[k].add(power);
      power *= m;
    }
  }
  std::vector<double> out(max_order + 1);
  for (int k = 0; k <= max_order; ++k) out[k] = acc[k].value();
  return out;
}

double GibbsTable::linear_mgf(std::span<const double> f, double z) const {
  if (f.size() != n_) throw std::invalid_argument("linear_mgf: f must have |V| entries");
  KahanSum acc;
  for (std::size_t c = 0; c < prob_.size(); ++c) {
    double m = 0.0;
    for (std::size_t x = 0; x < n_; ++x) m += ((c >> x) & 1u) ? -f[x] : f[x];
    acc.add(prob_[c] * std::exp(z * m));
  }
  return acc.value();
}

}  // namespace rcising
