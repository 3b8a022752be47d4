#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rcising/graph.hpp"
#include "rcising/rng.hpp"
#include "rcising/stats.hpp"

namespace rcising {

class McError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which quantities a spin-sampler run measures.
struct SpinObservables {
  /// Two-point functions <s_x s_y>.
  std::vector<std::pair<Vertex, Vertex>> pairs;
  /// Two-point function at axis distance r = 0..L/2, averaged over
  /// translations and axes. Periodic lattices only.
  bool axis_profile = false;
  /// Two-point function at every displacement, averaged over translations
  /// (FFT). Periodic lattices only.
  bool full_profile = false;
  /// Side of the block Lambda(L) for the moments of M = sum of spins over
  /// the block. When the torus side is a multiple of it, every block of the
  /// tiling is averaged; otherwise the single centered block is used.
  std::optional<int> block_side;
  /// Keep one block magnetization per measurement (first tiling block or the
  /// centered block), for sample-based generating functions.
  bool keep_block_samples = false;
  /// Whole-system magnetization moments and Binder cumulant.
  bool magnetization = true;
  /// S4, U4 and |U4| - S(x1,x3) S(x2,x4) for each quadruple.
  std::vector<std::array<Vertex, 4>> quadruples;
};

/// Monte Carlo run parameters. `sweeps` counts every sweep, thermalization
/// included; the default thermalization is 10% of the sweeps.
struct RunConfig {
  std::shared_ptr<const CouplingGraph> graph;
  double beta = 0.0;
  std::size_t sweeps = 10'000;
  std::optional<std::size_t> thermalization;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  std::size_t bins = 16;
  SpinObservables observables;
};

std::size_t thermalization_sweeps(const RunConfig& config);
void validate_run_config(const RunConfig& config);

enum class SpinUpdate { Wolff, Metropolis };

struct SpinRunResult {
  std::map<std::string, Estimate> estimates;
  /// Indexed like the row-major displacement of the torus.
  std::vector<Estimate> profile;
  /// profile_bins[b][x]: bin means of the profile, for jackknife fits.
  std::vector<std::vector<double>> profile_bins;
  std::vector<double> block_samples;
  SpinUpdate update = SpinUpdate::Wolff;
  /// Clusters per measured Wolff sweep, fixed after thermalization so that
  /// measurement times do not depend on the state.
  std::size_t clusters_per_sweep = 0;
  std::string block_convention;
};

/// Second-moment correlation length sqrt(chi / F - 1) / (2 sin(pi / L)), with
/// chi the sum of the profile and F its Fourier component at the smallest
/// nonzero momentum averaged over axes. profile_bins[b][x] as in SpinRunResult.
/// NaN when chi <= F.
Estimate second_moment_length(const LatticeSpec& lattice,
                              const std::vector<std::vector<double>>& profile_bins,
                              std::uint64_t seed = 0);

/// Cluster (or Metropolis) simulation of the zero-field Ising model.
/// Estimate names: "S2[x,y]", "S2_axis[r]", "block_M2", "block_M4",
/// "block_T4", "R", "m2", "m4", "binder", "S4[a,b,c,d]", "U4[a,b,c,d]",
/// "square_margin[a,b,c,d]", "pfaffian_residual[a,b,c,d]" (|S4 - Pf| / S4 with
/// the quadruple taken in cyclic order), "xi_2nd" (with full_profile).
SpinRunResult wolff_run(const RunConfig& config);

/// Wolff when every coupling is positive, Metropolis otherwise.
SpinUpdate choose_update(const CouplingGraph& graph);

/// Worm state: occupations with dn = A xor {head, tail}. Closed when head == tail.
struct WormState {
  std::vector<std::uint32_t> occupation;
  Vertex head = 0;
  Vertex tail = 0;

  bool closed() const { return head == tail; }
  friend bool operator==(const WormState&, const WormState&) = default;
};

/// Markov chain on worm states with stationary weight w(n). One step is a
/// relocation of a closed worm (probability 1/2) or a head shift along a
/// uniformly chosen incident edge by +-1 with Metropolis acceptance.
class WormSampler {
 public:
  WormSampler(std::shared_ptr<const CouplingGraph> graph, double beta, std::vector<Vertex> sources,
              std::uint64_t seed, std::uint64_t stream = 0);

  void step();
  /// 2|E| steps (at least 2).
  void sweep();
  std::size_t steps_per_sweep() const { return steps_per_sweep_; }

  const WormState& state() const { return state_; }
  const CouplingGraph& graph() const { return *graph_; }
  /// Parity of the incident occupation sum, kept in sync with the state.
  std::span<const std::uint8_t> vertex_parity() const { return parity_; }
  std::span<const Vertex> sources() const { return sources_; }

  /// Probability that one step moves `from` to `to` (from != to).
  static double transition_probability(const CouplingGraph& graph, double beta,
                                       const WormState& from, const WormState& to);
  /// Unnormalized stationary weight of a state.
  static double stationary_weight(const CouplingGraph& graph, double beta, const WormState& s);

 private:
  std::shared_ptr<const CouplingGraph> graph_;
  double beta_;
  std::vector<Vertex> sources_;
  CounterRng rng_;
  WormState state_;
  std::vector<std::uint8_t> parity_;
  std::vector<double> beta_j_;
  std::size_t steps_per_sweep_;
};

struct WormRunResult {
  std::map<std::string, Estimate> estimates;
  std::size_t closed_samples = 0;
};

/// Which quantities a worm run measures.
struct WormObservables {
  std::vector<std::pair<Vertex, Vertex>> pairs;
  std::optional<int> block_side;
};

/// Runs the worm chain in the sector dn = A. Closed states seen at the end of
/// each measured sweep are passed to `on_closed_sample`. Estimates:
/// "P_closed", "S2[x,y]" (A empty) or "sector_ratio[x,y]" (A non-empty, the
/// ratio of the sector sums with sources A xor {x,y} and A), and "block_M2".
WormRunResult worm_run(const RunConfig& config, std::span<const Vertex> A,
                       const WormObservables& observables = {},
                       const std::function<void(const WormState&)>& on_closed_sample = {});

struct IntersectionStats {
  Estimate p_nonempty;
  Estimate mean_size;
  Estimate mean_size_given_nonempty;
};

/// Q = C_{n1+n3}(x1) ∩ C_{n2+n4}(x3) from four independent worm chains with
/// dn1 = {x1,x2}, dn2 = {x3,x4}, dn3 = dn4 = ∅. Sample i pairs the i-th
/// closed sample of every chain.
IntersectionStats intersection_stats(const RunConfig& config, Vertex x1, Vertex x2, Vertex x3,
                                     Vertex x4);

class NoCrossing : public McError {
 public:
  using McError::McError;
};

struct BetaCOptions {
  std::size_t sweeps = 20'000;
  std::uint64_t seed = 1;
  std::size_t bins = 16;
  int max_bisections = 12;
  /// Stop once the bracket is narrower than this fraction of its midpoint.
  double relative_tolerance = 5e-4;
  double significance = 2.0;
};

struct BetaCEstimate {
  double beta_c = 0.0;
  double half_width = 0.0;
  int evaluations = 0;
};

/// Binder cumulant of the periodic torus L^d.
Estimate binder_cumulant(int d, int L, double beta, std::size_t sweeps, std::uint64_t seed,
                         std::uint64_t stream, std::size_t bins);

/// Bisection on the sign of U_{L2} - U_{L1} for consecutive sizes; several
/// pairs are averaged. Throws NoCrossing when the bracket shows no
/// significant sign change.
BetaCEstimate locate_beta_c(int d, std::span<const int> sizes, double beta_lo, double beta_hi,
                            const BetaCOptions& options = {});

}  // namespace rcising
