#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcising/graph.hpp"
#include "rcising/ising_exact.hpp"
#include "rcising/stats.hpp"

namespace rcising {

class DiagramError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two-point function table. Either dense over all vertex pairs, or
/// translation invariant on a periodic lattice (indexed by displacement).
class S2Table {
 public:
  /// Dense table from a row-major |V| x |V| matrix; must be symmetric.
  static S2Table dense(std::size_t num_vertices, std::vector<double> matrix);
  /// Translation-invariant table from the value at every displacement.
  static S2Table translation_invariant(const LatticeSpec& lattice, std::vector<double> profile);
  static S2Table from_gibbs(const GibbsTable& table);

  std::size_t num_vertices() const { return n_; }
  double operator()(Vertex x, Vertex y) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
  std::optional<LatticeSpec> lattice_;
};

/// B_ell = sum over x with |x - center| < ell of S2(center, x)^2, with the
/// distance of graph_distance.
double bubble(const CouplingGraph& graph, const S2Table& s2, Vertex center, double ell);

/// 2 sum_u prod_j S2(u, x_j).
double tree_rhs(const S2Table& s2, const std::array<Vertex, 4>& x);

/// Point-split tree bound: 2 sum_{y not in x, u, v} S2(x1,y) S2(x2,y)
/// [bJ_yu] S2(u,x3) [bJ_yv] S2(v,x4), plus 2 sum_{j} sum_{u != x_j}
/// S2(x_j,x_{j+1}) S2(x_j,x_{j+2}) [bJ_{x_j u}] S2(u,x_{j+3}) with indices mod 4.
double tree_rhs_balanced(const S2Table& s2, const CouplingGraph& couplings, double beta,
                         const std::array<Vertex, 4>& x);

/// -[<T^4> - 3 <T^2>^2] for a normalized block variable.
double r_ratio(double t2, double t4);
/// Same from raw block moments <M^2>, <M^4> (normalizes by <M^2>).
double r_ratio_from_block(double m2, double m4);

/// Sum over the (2n-1)!! pairings of the product of pair values.
double wick_functional(const S2Table& s2, std::span<const Vertex> points);

struct WickGap {
  double gap = 0.0;
  double bound = 0.0;
  bool holds = false;
};

/// G_2n[S2] - S_2n against -(3/2) sum_{j<k<l<m} U4 G_{2n-4}[S2](rest).
WickGap wick_gap_check(const GibbsTable& table, std::span<const Vertex> points,
                       double tolerance = 1e-10);
WickGap wick_gap_check(const CouplingGraph& graph, double beta, std::span<const Vertex> points,
                       double tolerance = 1e-10);

/// Quantities of the smeared field T_f = sum_x f_x s_x / sqrt(Sigma) with
/// Sigma = <(sum_{x in block} s_x)^2>.
struct SmearedMoments {
  double sigma = 0.0;      ///< block normalization
  double t_f2 = 0.0;       ///< <T_f^2>
  double t_abs_f2 = 0.0;   ///< <T_|f|^2>
  double r_tilde = 0.0;    ///< -(<M_|f|^4> - 3<M_|f|^2>^2) / Sigma^2
};

SmearedMoments exact_smeared_moments(const GibbsTable& table, std::span<const double> f,
                                     std::span<const Vertex> block);

/// Continuous test functions on R^d, supported in [-1, 1]^d with sup 1.
enum class TestFunction { Indicator, Tent, CosineProduct };

double test_function(TestFunction kind, std::span<const double> u);
TestFunction parse_test_function(const std::string& name);

/// f((x - center) / scale) at every vertex of a lattice, with the minimal-image
/// displacement on periodic lattices.
std::vector<double> smearing_weights(const LatticeSpec& lattice, TestFunction kind, double scale,
                                     Vertex center);

struct MgfGap {
  std::vector<double> z;
  std::vector<double> lhs;
  std::vector<double> rhs;
  /// max over the grid of lhs - rhs; negative means the bound holds everywhere.
  double max_violation = 0.0;
};

/// |<e^{zT_f}> - e^{z^2 <T_f^2>/2}| against 2^-4 z^4 e^{z^2 <T_|f|^2>/2} R~.
MgfGap mgf_gap_check(std::span<const double> z_grid, const std::function<double(double)>& mgf,
                     double t_f2, double t_abs_f2, double r_tilde);
MgfGap mgf_gap_check_exact(const GibbsTable& table, std::span<const double> f,
                           std::span<const Vertex> block, std::span<const double> z_grid);
/// Sample-based generating function; throws when a single sample carries more
/// than half of the estimate at some z (z too large for the sample size).
MgfGap mgf_gap_check_samples(std::span<const double> t_samples, std::span<const double> z_grid,
                             double t_abs_f2, double r_tilde);

/// The scaled-ratio and variance inequalities used to pass from R_{rL} to
/// smeared fields; margins are right side minus left side.
struct TransferCheck {
  double ratio_margin = 0.0;
  double variance_margin = 0.0;
  bool holds = false;
};
TransferCheck smeared_transfer_check(double r_tilde_f, double t_f2, double r_rl, double r,
                                     int d, double f_sup, double tolerance = 0.0);

/// Two-point function grouped by distance, with per-bin values for jackknife errors.
struct RadialProfile {
  std::vector<double> distance;
  /// bins[b][i] is the value at distance[i] in bin b.
  std::vector<std::vector<double>> bins;
};

/// Groups a translation-invariant profile (per displacement, per bin) by
/// minimal-image distance.
RadialProfile radial_profile(const LatticeSpec& lattice,
                             const std::vector<std::vector<double>>& profile_bins);

struct DyadicClass {
  double r_lo = 0.0;
  double r_hi = 0.0;
  Estimate scaled;  ///< average of S2 * r^(d-2) over the distinct radii in the class
};

struct S2Report {
  bool degenerate = false;
  std::string note;
  Estimate exponent;           ///< decay exponent of S2 fitted on dyadic classes
  double c2 = 0.0;             ///< smallest C with bJ S2 <= C / r^(d-2) for every class average
  bool infrared_consistent = false;  ///< bJ S2 r^(d-2) is not largest at the outermost class
  std::vector<DyadicClass> classes;
  bool scaled_non_increasing = false;  ///< within `k_sigma` combined errors
};

/// Decay diagnostics on distances in [r_min, r_max).
S2Report s2_diagnostics(const RadialProfile& profile, int d, double beta_j, double r_min,
                        double r_max, double k_sigma = 2.0);

/// Four corners of a square of the given side centered in a 2D torus, in cyclic order.
std::array<Vertex, 4> symmetric_square(const LatticeSpec& lattice, int side);

}  // namespace rcising
