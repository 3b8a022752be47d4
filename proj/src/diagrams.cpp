#include "rcising/diagrams.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "rcising/pfaffian.hpp"

namespace rcising {

S2Table S2Table::dense(std::size_t num_vertices, std::vector<double> matrix) {
  if (matrix.size() != num_vertices * num_vertices)
    throw DiagramError("dense S2 table needs |V|^2 entries");
  for (std::size_t x = 0; x < num_vertices; ++x)
    for (std::size_t y = x + 1; y < num_vertices; ++y)
      if (matrix[x * num_vertices + y] != matrix[y * num_vertices + x])
        throw DiagramError("S2 table must be symmetric");
  S2Table t;
  t.n_ = num_vertices;
  t.values_ = std::move(matrix);
  return t;
}

S2Table S2Table::translation_invariant(const LatticeSpec& lattice, std::vector<double> profile) {
  if (lattice.bc != Boundary::Periodic)
    throw DiagramError("translation-invariant tables need a periodic lattice");
  std::size_t n = 1;
  for (int k = 0; k < lattice.d; ++k) n *= static_cast<std::size_t>(lattice.L);
  if (profile.size() != n) throw DiagramError("profile must have one entry per displacement");
  S2Table t;
  t.n_ = n;
  t.values_ = std::move(profile);
  t.lattice_ = lattice;
  return t;
}

S2Table S2Table::from_gibbs(const GibbsTable& table) {
  return dense(table.num_vertices(), table.s2_matrix());
}

double S2Table::operator()(Vertex x, Vertex y) const {
  if (x >= n_ || y >= n_) throw DiagramError("S2 table: vertex out of range");
  if (!lattice_) return values_[static_cast<std::size_t>(x) * n_ + y];
  const auto cx = lattice_coordinates(*lattice_, x);
  const auto cy = lattice_coordinates(*lattice_, y);
  std::size_t index = 0;
  for (int k = 0; k < lattice_->d; ++k) {
    const int disp = ((cy[k] - cx[k]) % lattice_->L + lattice_->L) % lattice_->L;
    index = index * static_cast<std::size_t>(lattice_->L) + static_cast<std::size_t>(disp);
  }
  return values_[index];
}

double bubble(const CouplingGraph& graph, const S2Table& s2, Vertex center, double ell) {
  if (s2.num_vertices() != graph.num_vertices())
    throw DiagramError("bubble: S2 table does not cover the graph");
  double total = 0.0;
  for (Vertex x = 0; x < graph.num_vertices(); ++x) {
    if (graph_distance(graph, center, x) >= ell) continue;
    const double v = s2(center, x);
    total += v * v;
  }
  return total;
}

double tree_rhs(const S2Table& s2, const std::array<Vertex, 4>& x) {
  double total = 0.0;
  for (Vertex u = 0; u < s2.num_vertices(); ++u)
    total += s2(u, x[0]) * s2(u, x[1]) * s2(u, x[2]) * s2(u, x[3]);
  return 2.0 * total;
}

double tree_rhs_balanced(const S2Table& s2, const CouplingGraph& couplings, double beta,
                         const std::array<Vertex, 4>& x) {
  if (s2.num_vertices() != couplings.num_vertices())
    throw DiagramError("balanced tree bound: S2 table does not match the coupling graph");
  // Flux of the point-split link from y towards target: sum_u [bJ_yu] S2(u, target).
  auto link = [&](Vertex y, Vertex target) {
    double s = 0.0;
    for (const Incidence& inc : couplings.neighbors(y))
      s += beta * couplings.edge(inc.edge).J * s2(inc.neighbor, target);
    return s;
  };
  double main = 0.0;
  for (Vertex y = 0; y < couplings.num_vertices(); ++y) {
    if (std::find(x.begin(), x.end(), y) != x.end()) continue;
    const double head = s2(x[0], y) * s2(x[1], y);
    if (head == 0.0) continue;
    main += head * link(y, x[2]) * link(y, x[3]);
  }
  double corner = 0.0;
  for (int j = 0; j < 4; ++j) {
    const Vertex xj = x[static_cast<std::size_t>(j)];
    corner += s2(xj, x[static_cast<std::size_t>((j + 1) % 4)]) *
              s2(xj, x[static_cast<std::size_t>((j + 2) % 4)]) *
              link(xj, x[static_cast<std::size_t>((j + 3) % 4)]);
  }
  return 2.0 * main + 2.0 * corner;
}

double r_ratio(double t2, double t4) { return -(t4 - 3.0 * t2 * t2); }

double r_ratio_from_block(double m2, double m4) {
  if (!(m2 > 0.0)) throw DiagramError("R ratio needs a positive block normalization");
  return r_ratio(1.0, m4 / (m2 * m2));
}

namespace {

/// Pairing sum over points[idx[...]] with pair values from `pair`.
template <class PairValue>
double wick_over(std::vector<std::size_t>& idx, const PairValue& pair) {
  if (idx.empty()) return 1.0;
  const std::size_t first = idx.front();
  double total = 0.0;
  for (std::size_t k = 1; k < idx.size(); ++k) {
    const double v = pair(first, idx[k]);
    if (v == 0.0) continue;
    std::vector<std::size_t> rest;
    rest.reserve(idx.size() - 2);
    for (std::size_t m = 1; m < idx.size(); ++m)
      if (m != k) rest.push_back(idx[m]);
    total += v * wick_over(rest, pair);
  }
  return total;
}

}  // namespace

double wick_functional(const S2Table& s2, std::span<const Vertex> points) {
  if (points.size() % 2 != 0) throw DiagramError("Wick functional needs an even number of points");
  std::vector<std::size_t> idx(points.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return wick_over(idx, [&](std::size_t a, std::size_t b) { return s2(points[a], points[b]); });
}

WickGap wick_gap_check(const GibbsTable& table, std::span<const Vertex> points, double tolerance) {
  const std::size_t m = points.size();
  if (m % 2 != 0 || m < 4) throw DiagramError("Wick gap check needs 2n >= 4 points");
  std::vector<double> pair(m * m, 1.0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      pair[a * m + b] = pair[b * m + a] = table.s2(points[a], points[b]);
  auto pv = [&](std::size_t a, std::size_t b) { return pair[a * m + b]; };

  std::vector<std::size_t> all(m);
  for (std::size_t i = 0; i < m; ++i) all[i] = i;
  WickGap out;
  out.gap = wick_over(all, pv) - table.correlation(points);
  double bound = 0.0;
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = j + 1; k < m; ++k)
      for (std::size_t l = k + 1; l < m; ++l)
        for (std::size_t q = l + 1; q < m; ++q) {
          const double u4 = table.ursell4(points[j], points[k], points[l], points[q]);
          std::vector<std::size_t> rest;
          for (std::size_t i = 0; i < m; ++i)
            if (i != j && i != k && i != l && i != q) rest.push_back(i);
          bound += u4 * wick_over(rest, pv);
        }
  out.bound = -1.5 * bound;
  out.holds = out.gap >= -tolerance && out.gap <= out.bound + tolerance;
  return out;
}

WickGap wick_gap_check(const CouplingGraph& graph, double beta, std::span<const Vertex> points,
                       double tolerance) {
  return wick_gap_check(GibbsTable(graph, ThermoParams{beta, 0.0}), points, tolerance);
}

SmearedMoments exact_smeared_moments(const GibbsTable& table, std::span<const double> f,
                                     std::span<const Vertex> block) {
  const std::size_t n = table.num_vertices();
  if (f.size() != n) throw DiagramError("test function needs one value per vertex");
  std::vector<double> indicator(n, 0.0);
  for (Vertex v : block) {
    if (v >= n) throw DiagramError("block vertex out of range");
    indicator[v] = 1.0;
  }
  SmearedMoments out;
  out.sigma = table.linear_moments(indicator, 2)[2];
  if (!(out.sigma > 0.0)) throw DiagramError("block normalization must be positive");
  std::vector<double> abs_f(n);
  for (std::size_t i = 0; i < n; ++i) abs_f[i] = std::abs(f[i]);
  out.t_f2 = table.linear_moments(f, 2)[2] / out.sigma;
  const auto mabs = table.linear_moments(abs_f, 4);
  out.t_abs_f2 = mabs[2] / out.sigma;
  out.r_tilde = -(mabs[4] - 3.0 * mabs[2] * mabs[2]) / (out.sigma * out.sigma);
  return out;
}

double test_function(TestFunction kind, std::span<const double> u) {
  double value = 1.0;
  for (double c : u) {
    const double a = std::abs(c);
    if (a > 1.0) return 0.0;
    switch (kind) {
      case TestFunction::Indicator:
        break;
      case TestFunction::Tent:
        value *= 1.0 - a;
        break;
      case TestFunction::CosineProduct:
        value *= std::cos(0.5 * std::numbers::pi * a);
        break;
    }
  }
  return value;
}

TestFunction parse_test_function(const std::string& name) {
  if (name == "indicator") return TestFunction::Indicator;
  if (name == "tent") return TestFunction::Tent;
  if (name == "cosine") return TestFunction::CosineProduct;
  throw DiagramError("unknown test function '" + name + "'");
}

std::vector<double> smearing_weights(const LatticeSpec& lattice, TestFunction kind, double scale,
                                     Vertex center) {
  if (!(scale > 0.0)) throw DiagramError("smearing scale must be positive");
  const std::size_t n = static_cast<std::size_t>(std::pow(lattice.L, lattice.d));
  if (center >= n) throw DiagramError("smearing center outside the lattice");
  const auto origin = lattice_coordinates(lattice, center);
  std::vector<double> out(n);
  std::vector<double> u(static_cast<std::size_t>(lattice.d));
  for (Vertex v = 0; v < n; ++v) {
    const auto c = lattice_coordinates(lattice, v);
    for (std::size_t i = 0; i < u.size(); ++i) {
      int delta = c[i] - origin[i];
      if (lattice.bc == Boundary::Periodic) {
        delta = ((delta % lattice.L) + lattice.L) % lattice.L;
        if (2 * delta > lattice.L) delta -= lattice.L;
      }
      u[i] = delta / scale;
    }
    out[v] = test_function(kind, u);
  }
  return out;
}

MgfGap mgf_gap_check(std::span<const double> z_grid, const std::function<double(double)>& mgf,
                     double t_f2, double t_abs_f2, double r_tilde) {
  MgfGap out;
  out.max_violation = -std::numeric_limits<double>::infinity();
  for (double z : z_grid) {
    const double lhs = std::abs(mgf(z) - std::exp(0.5 * z * z * t_f2));
    const double rhs = std::pow(z, 4) / 16.0 * std::exp(0.5 * z * z * t_abs_f2) * r_tilde;
    out.z.push_back(z);
    out.lhs.push_back(lhs);
    out.rhs.push_back(rhs);
    out.max_violation = std::max(out.max_violation, lhs - rhs);
  }
  return out;
}

MgfGap mgf_gap_check_exact(const GibbsTable& table, std::span<const double> f,
                           std::span<const Vertex> block, std::span<const double> z_grid) {
  const SmearedMoments sm = exact_smeared_moments(table, f, block);
  std::vector<double> scaled(f.begin(), f.end());
  for (double& v : scaled) v /= std::sqrt(sm.sigma);
  return mgf_gap_check(
      z_grid, [&](double z) { return table.linear_mgf(scaled, z); }, sm.t_f2, sm.t_abs_f2,
      sm.r_tilde);
}

MgfGap mgf_gap_check_samples(std::span<const double> t_samples, std::span<const double> z_grid,
                             double t_abs_f2, double r_tilde) {
  if (t_samples.empty()) throw DiagramError("no samples for the generating function");
  double t2 = 0.0;
  for (double t : t_samples) t2 += t * t;
  t2 /= static_cast<double>(t_samples.size());
  auto mgf = [&](double z) {
    double total = 0.0, largest = 0.0;
    for (double t : t_samples) {
      const double term = std::exp(z * t);
      total += term;
      largest = std::max(largest, term);
    }
    if (largest > 0.5 * total)
      throw DiagramError("generating function estimate is dominated by one sample at z = " +
                         std::to_string(z));
    return total / static_cast<double>(t_samples.size());
  };
  return mgf_gap_check(z_grid, mgf, t2, t_abs_f2, r_tilde);
}

TransferCheck smeared_transfer_check(double r_tilde_f, double t_f2, double r_rl, double r, int d,
                                     double f_sup, double tolerance) {
  TransferCheck out;
  const double volume = std::pow(r, d);
  out.ratio_margin = volume * std::pow(f_sup, 4) * r_rl - r_tilde_f;
  out.variance_margin = volume * f_sup * f_sup - t_f2;
  out.holds = out.ratio_margin >= -tolerance && out.variance_margin >= -tolerance;
  return out;
}

RadialProfile radial_profile(const LatticeSpec& lattice,
                             const std::vector<std::vector<double>>& profile_bins) {
  if (lattice.bc != Boundary::Periodic) throw DiagramError("radial profile needs a torus");
  if (profile_bins.empty()) throw DiagramError("radial profile needs at least one bin");
  std::size_t n = 1;
  for (int k = 0; k < lattice.d; ++k) n *= static_cast<std::size_t>(lattice.L);
  std::map<long, std::vector<std::size_t>> by_distance;
  for (std::size_t disp = 0; disp < n; ++disp) {
    const auto c = lattice_coordinates(lattice, static_cast<Vertex>(disp));
    long d2 = 0;
    for (int k = 0; k < lattice.d; ++k) {
      const long m = std::min(c[k], lattice.L - c[k]);
      d2 += m * m;
    }
    by_distance[d2].push_back(disp);
  }
  RadialProfile out;
  out.bins.assign(profile_bins.size(), {});
  for (const auto& [d2, members] : by_distance) {
    out.distance.push_back(std::sqrt(static_cast<double>(d2)));
    for (std::size_t b = 0; b < profile_bins.size(); ++b) {
      if (profile_bins[b].size() != n) throw DiagramError("profile bin has the wrong size");
      double s = 0.0;
      for (std::size_t disp : members) s += profile_bins[b][disp];
      out.bins[b].push_back(s / static_cast<double>(members.size()));
    }
  }
  return out;
}

namespace {

struct ClassLayout {
  std::vector<std::vector<std::size_t>> members;
  std::vector<double> lo, hi;
};

ClassLayout dyadic_layout(const RadialProfile& profile, double r_min, double r_max) {
  std::map<int, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < profile.distance.size(); ++i) {
    const double r = profile.distance[i];
    if (r <= 0.0 || r < r_min || r >= r_max) continue;
    classes[static_cast<int>(std::floor(std::log2(r)))].push_back(i);
  }
  ClassLayout out;
  for (auto& [k, members] : classes) {
    out.members.push_back(std::move(members));
    out.lo.push_back(std::ldexp(1.0, k));
    out.hi.push_back(std::ldexp(1.0, k + 1));
  }
  return out;
}

}  // namespace

S2Report s2_diagnostics(const RadialProfile& profile, int d, double beta_j, double r_min,
                        double r_max, double k_sigma) {
  if (profile.bins.empty()) throw DiagramError("two-point diagnostics need data");
  const ClassLayout layout = dyadic_layout(profile, r_min, r_max);
  S2Report report;
  if (layout.members.size() < 2) {
    throw DiagramError("two-point diagnostics need at least two distance classes in range");
  }
  const std::size_t nclass = layout.members.size();
  const double power = static_cast<double>(d - 2);

  // means[i] indexes profile distances.
  auto class_scaled = [&](std::span<const double> means, std::size_t c) {
    double s = 0.0;
    for (std::size_t i : layout.members[c]) s += means[i] * std::pow(profile.distance[i], power);
    return s / static_cast<double>(layout.members[c].size());
  };
  auto exponent_of = [&](std::span<const double> means) {
    std::vector<double> xs, ys;
    for (std::size_t c = 0; c < nclass; ++c) {
      double lr = 0.0, s = 0.0;
      for (std::size_t i : layout.members[c]) {
        lr += std::log(profile.distance[i]);
        s += means[i];
      }
      const double cnt = static_cast<double>(layout.members[c].size());
      if (!(s > 0.0)) return std::numeric_limits<double>::quiet_NaN();
      xs.push_back(lr / cnt);
      ys.push_back(std::log(s / cnt));
    }
    return -fit_line(xs, ys).slope;
  };

  const std::size_t nbins = profile.bins.size();
  std::vector<std::vector<double>> table(profile.distance.size(), std::vector<double>(nbins));
  for (std::size_t b = 0; b < nbins; ++b)
    for (std::size_t i = 0; i < profile.distance.size(); ++i) table[i][b] = profile.bins[b][i];
  auto estimate = [&](const MeanFunction& f) {
    if (nbins >= 2) return jackknife_from_bins(table, f);
    std::vector<double> means(profile.distance.size());
    for (std::size_t i = 0; i < means.size(); ++i) means[i] = table[i][0];
    return Estimate{f(means), 0.0, 1, 0, 0};
  };

  report.exponent = estimate(exponent_of);
  if (!std::isfinite(report.exponent.mean)) {
    report.degenerate = true;
    report.note = "non-positive two-point values in range; decay exponent undefined";
  }
  std::size_t argmax = 0;
  for (std::size_t c = 0; c < nclass; ++c) {
    DyadicClass dc;
    dc.r_lo = layout.lo[c];
    dc.r_hi = layout.hi[c];
    dc.scaled = estimate([&, c](std::span<const double> m) { return class_scaled(m, c); });
    const double bound = beta_j * dc.scaled.mean;
    if (c == 0 || bound > report.c2) {
      report.c2 = bound;
      argmax = c;
    }
    report.classes.push_back(dc);
  }
  report.infrared_consistent = argmax + 1 != nclass;
  report.scaled_non_increasing = true;
  for (std::size_t c = 0; c + 1 < nclass; ++c) {
    const auto& a = report.classes[c].scaled;
    const auto& b = report.classes[c + 1].scaled;
    if (b.mean > a.mean + k_sigma * std::hypot(a.error, b.error))
      report.scaled_non_increasing = false;
  }
  return report;
}

std::array<Vertex, 4> symmetric_square(const LatticeSpec& lattice, int side) {
  if (lattice.d != 2) throw DiagramError("symmetric square needs a 2D lattice");
  if (side < 1 || side >= lattice.L) throw DiagramError("square side must lie in [1, L)");
  const int start = lattice.L / 2 - side / 2;
  auto at = [&](int a, int b) {
    const int c[2] = {(a % lattice.L + lattice.L) % lattice.L, (b % lattice.L + lattice.L) % lattice.L};
    return lattice_index(lattice, c);
  };
  return {at(start, start), at(start, start + side), at(start + side, start + side),
          at(start + side, start)};
}

}  // namespace rcising
