#include "rcising/worm_mc.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <numeric>

namespace rcising {

namespace {

std::string pair_name(const char* prefix, Vertex x, Vertex y) {
  return std::string(prefix) + "[" + std::to_string(x) + "," + std::to_string(y) + "]";
}

std::string quad_name(const char* prefix, const std::array<Vertex, 4>& q) {
  return std::string(prefix) + "[" + std::to_string(q[0]) + "," + std::to_string(q[1]) + "," +
         std::to_string(q[2]) + "," + std::to_string(q[3]) + "]";
}

void check_vertex(const CouplingGraph& graph, Vertex v) {
  if (v >= graph.num_vertices())
    throw McError("vertex " + std::to_string(v) + " is not in the graph");
}

const LatticeSpec& periodic_lattice(const CouplingGraph& graph, const char* what) {
  const auto& lattice = graph.lattice();
  if (!lattice || lattice->bc != Boundary::Periodic)
    throw McError(std::string(what) + " requires a periodic lattice");
  return *lattice;
}

/// Blocks of side `side` used for block moments, and a description of the choice.
struct BlockLayout {
  std::vector<int> block_of;  // -1 outside every block
  std::size_t num_blocks = 0;
  std::string convention;
};

BlockLayout make_blocks(const CouplingGraph& graph, int side) {
  const auto& lattice = graph.lattice();
  if (!lattice) throw McError("block moments require a lattice graph");
  const int L = lattice->L;
  const int d = lattice->d;
  if (side < 1 || side > L)
    throw McError("block side " + std::to_string(side) + " must lie in [1, " + std::to_string(L) +
                  "]");
  BlockLayout layout;
  layout.block_of.assign(graph.num_vertices(), -1);
  if (lattice->bc == Boundary::Periodic && L % side == 0) {
    const int per_axis = L / side;
    layout.num_blocks = 1;
    for (int k = 0; k < d; ++k) layout.num_blocks *= static_cast<std::size_t>(per_axis);
    for (Vertex v = 0; v < graph.num_vertices(); ++v) {
      const auto c = lattice_coordinates(*lattice, v);
      int id = 0;
      for (int k = 0; k < d; ++k) id = id * per_axis + c[k] / side;
      layout.block_of[v] = id;
    }
    layout.convention = "tiling: average over " + std::to_string(layout.num_blocks) +
                        " blocks of side " + std::to_string(side);
  } else {
    const int start = L / 2 - side / 2;
    layout.num_blocks = 1;
    for (Vertex v = 0; v < graph.num_vertices(); ++v) {
      const auto c = lattice_coordinates(*lattice, v);
      bool inside = true;
      for (int k = 0; k < d; ++k) inside = inside && c[k] >= start && c[k] < start + side;
      if (inside) layout.block_of[v] = 0;
    }
    layout.convention = "centered: block of side " + std::to_string(side) +
                        " with lowest corner at coordinate " + std::to_string(start);
  }
  return layout;
}

/// Translation-averaged spin autocorrelation on a periodic hypercubic torus.
class FftAutocorrelation {
 public:
  FftAutocorrelation(int d, int L) : size_(1) {
    std::vector<int> dims(static_cast<std::size_t>(d), L);
    for (int k = 0; k < d; ++k) size_ *= static_cast<std::size_t>(L);
    complex_size_ = size_ / static_cast<std::size_t>(L) * static_cast<std::size_t>(L / 2 + 1);
    real_ = fftw_alloc_real(size_);
    spectrum_ = fftw_alloc_complex(complex_size_);
    if (!real_ || !spectrum_) throw std::bad_alloc();
    forward_ = fftw_plan_dft_r2c(d, dims.data(), real_, spectrum_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r(d, dims.data(), spectrum_, real_, FFTW_ESTIMATE);
  }
  FftAutocorrelation(const FftAutocorrelation&) = delete;
  FftAutocorrelation& operator=(const FftAutocorrelation&) = delete;
  ~FftAutocorrelation() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(spectrum_);
  }

  /// out[x] = (1/N) sum_y s_y s_{y+x}.
  void compute(std::span<const std::int8_t> spins, std::span<double> out) {
    for (std::size_t i = 0; i < size_; ++i) real_[i] = spins[i];
    fftw_execute(forward_);
    for (std::size_t i = 0; i < complex_size_; ++i) {
      spectrum_[i][0] = spectrum_[i][0] * spectrum_[i][0] + spectrum_[i][1] * spectrum_[i][1];
      spectrum_[i][1] = 0.0;
    }
    fftw_execute(backward_);
    const double norm = 1.0 / (static_cast<double>(size_) * static_cast<double>(size_));
    for (std::size_t i = 0; i < size_; ++i) out[i] = real_[i] * norm;
  }

 private:
  std::size_t size_;
  std::size_t complex_size_ = 0;
  double* real_ = nullptr;
  fftw_complex* spectrum_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Accumulates a vector-valued observable directly into bins.
class VectorBins {
 public:
  VectorBins(std::size_t dim, std::size_t samples, std::size_t bins)
      : dim_(dim), bins_(bins), per_bin_(samples / bins), sums_(dim * bins, 0.0) {}

  void add(std::size_t sample, std::span<const double> values) {
    const std::size_t b = sample / per_bin_;
    if (b >= bins_) return;
    double* row = sums_.data() + b * dim_;
    for (std::size_t i = 0; i < dim_; ++i) row[i] += values[i];
  }

  /// result[b][i]: mean of component i in bin b.
  std::vector<std::vector<double>> bin_means() const {
    std::vector<std::vector<double>> out(bins_, std::vector<double>(dim_));
    for (std::size_t b = 0; b < bins_; ++b)
      for (std::size_t i = 0; i < dim_; ++i)
        out[b][i] = sums_[b * dim_ + i] / static_cast<double>(per_bin_);
    return out;
  }

  std::vector<Estimate> estimates(std::uint64_t seed) const {
    std::vector<Estimate> out(dim_);
    const double nb = static_cast<double>(bins_);
    for (std::size_t i = 0; i < dim_; ++i) {
      double mean = 0.0;
      for (std::size_t b = 0; b < bins_; ++b) mean += sums_[b * dim_ + i] / per_bin_;
      mean /= nb;
      double var = 0.0;
      for (std::size_t b = 0; b < bins_; ++b) {
        const double m = sums_[b * dim_ + i] / per_bin_;
        var += (m - mean) * (m - mean);
      }
      out[i] = Estimate{mean, std::sqrt(var / (nb * (nb - 1.0))), bins_, per_bin_ * bins_, seed};
    }
    return out;
  }

 private:
  std::size_t dim_;
  std::size_t bins_;
  std::size_t per_bin_;
  std::vector<double> sums_;
};

class SpinSystem {
 public:
  SpinSystem(const CouplingGraph& graph, double beta, CounterRng& rng)
      : graph_(graph), beta_(beta), rng_(rng), spins_(graph.num_vertices()) {
    bond_prob_.resize(graph.num_edges());
    for (std::size_t e = 0; e < graph.num_edges(); ++e)
      bond_prob_[e] = -std::expm1(-2.0 * beta * graph.edge(e).J);
    for (auto& s : spins_) s = (rng_() & 1u) ? 1 : -1;
    stack_.reserve(graph.num_vertices());
  }

  std::span<const std::int8_t> spins() const { return spins_; }

  /// Grows and flips one Wolff cluster; returns its size.
  std::size_t wolff_cluster() {
    const auto seed = static_cast<Vertex>(rng_.below(graph_.num_vertices()));
    const std::int8_t old = spins_[seed];
    spins_[seed] = static_cast<std::int8_t>(-old);
    stack_.clear();
    stack_.push_back(seed);
    std::size_t size = 1;
    while (!stack_.empty()) {
      const Vertex v = stack_.back();
      stack_.pop_back();
      for (const Incidence& inc : graph_.neighbors(v)) {
        if (spins_[inc.neighbor] != old) continue;
        if (rng_.uniform() < bond_prob_[inc.edge]) {
          spins_[inc.neighbor] = static_cast<std::int8_t>(-old);
          stack_.push_back(inc.neighbor);
          ++size;
        }
      }
    }
    return size;
  }

  /// Clusters until at least |V| spins were flipped. The stopping time depends
  /// on the state, so this is used only before measurements start.
  void adaptive_sweep() {
    std::size_t flipped = 0;
    while (flipped < graph_.num_vertices()) {
      flipped += wolff_cluster();
      ++clusters_;
    }
    flipped_ += flipped;
  }

  void cluster_step() {
    flipped_ += wolff_cluster();
    ++clusters_;
  }

  /// A fixed number of clusters, state independent.
  void fixed_sweep(std::size_t clusters) {
    for (std::size_t c = 0; c < clusters; ++c) wolff_cluster();
  }

  std::size_t clusters_grown() const { return clusters_; }
  /// Clusters whose mean total size is |V|, from the clusters grown so far.
  std::size_t clusters_per_sweep() const {
    if (flipped_ == 0) return 1;
    const double per = static_cast<double>(graph_.num_vertices()) *
                       static_cast<double>(clusters_) / static_cast<double>(flipped_);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(per)));
  }

  void metropolis_sweep() {
    for (Vertex v = 0; v < graph_.num_vertices(); ++v) {
      double field = 0.0;
      for (const Incidence& inc : graph_.neighbors(v))
        field += graph_.edge(inc.edge).J * spins_[inc.neighbor];
      const double delta = 2.0 * beta_ * spins_[v] * field;
      if (delta <= 0.0 || rng_.uniform() < std::exp(-delta))
        spins_[v] = static_cast<std::int8_t>(-spins_[v]);
    }
  }

 private:
  const CouplingGraph& graph_;
  double beta_;
  CounterRng& rng_;
  std::vector<std::int8_t> spins_;
  std::vector<double> bond_prob_;
  std::vector<Vertex> stack_;
  std::size_t clusters_ = 0;
  std::size_t flipped_ = 0;
};

constexpr double kBinderMax = 2.0 / 3.0;

}  // namespace

std::size_t thermalization_sweeps(const RunConfig& config) {
  return config.thermalization.value_or(config.sweeps / 10);
}

void validate_run_config(const RunConfig& config) {
  if (!config.graph) throw McError("run configuration has no graph");
  if (!std::isfinite(config.beta) || config.beta < 0.0) throw McError("beta must be finite and >= 0");
  if (!config.graph->ferromagnetic()) throw McError("couplings must be ferromagnetic");
  if (config.bins < 8) throw McError("bin count must be at least 8");
  const std::size_t thermal = thermalization_sweeps(config);
  if (config.sweeps <= thermal) throw McError("sweeps must exceed thermalization sweeps");
  if (config.sweeps - thermal < config.bins)
    throw McError("insufficient sweeps: " + std::to_string(config.sweeps - thermal) +
                  " measured sweeps for " + std::to_string(config.bins) + " bins");
  if (config.graph->num_vertices() == 0) throw McError("graph has no vertices");
}

SpinUpdate choose_update(const CouplingGraph& graph) {
  return graph.all_couplings_positive() ? SpinUpdate::Wolff : SpinUpdate::Metropolis;
}

Estimate second_moment_length(const LatticeSpec& lattice,
                              const std::vector<std::vector<double>>& profile_bins,
                              std::uint64_t seed) {
  const std::size_t nb = profile_bins.size();
  std::vector<std::vector<double>> table(2, std::vector<double>(nb, 0.0));
  const double k = 2.0 * std::numbers::pi / lattice.L;
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& row = profile_bins[b];
    for (std::size_t x = 0; x < row.size(); ++x) {
      const auto c = lattice_coordinates(lattice, static_cast<Vertex>(x));
      double phase = 0.0;
      for (int coord : c) phase += std::cos(k * coord);
      table[0][b] += row[x];
      table[1][b] += row[x] * phase / lattice.d;
    }
  }
  const double s = 2.0 * std::sin(std::numbers::pi / lattice.L);
  return jackknife_from_bins(
      table,
      [s](std::span<const double> m) {
        return m[0] > m[1] ? std::sqrt(m[0] / m[1] - 1.0) / s
                           : std::numeric_limits<double>::quiet_NaN();
      },
      0, seed);
}

SpinRunResult wolff_run(const RunConfig& config) {
  validate_run_config(config);
  const CouplingGraph& graph = *config.graph;
  const SpinObservables& obs = config.observables;
  for (const auto& [x, y] : obs.pairs) {
    check_vertex(graph, x);
    check_vertex(graph, y);
  }
  for (const auto& q : obs.quadruples)
    for (Vertex v : q) check_vertex(graph, v);

  SpinRunResult result;
  result.update = choose_update(graph);
  CounterRng rng(config.seed, config.stream);
  SpinSystem system(graph, config.beta, rng);
  const bool wolff = result.update == SpinUpdate::Wolff;
  const std::size_t thermal = thermalization_sweeps(config);
  for (std::size_t s = 0; s < thermal; ++s) {
    if (wolff)
      system.adaptive_sweep();
    else
      system.metropolis_sweep();
  }
  while (wolff && system.clusters_grown() < 1000) system.cluster_step();
  const std::size_t per_sweep = wolff ? system.clusters_per_sweep() : 0;
  result.clusters_per_sweep = per_sweep;
  auto sweep = [&] {
    if (wolff)
      system.fixed_sweep(per_sweep);
    else
      system.metropolis_sweep();
  };

  const std::size_t measured = config.sweeps - thermal;
  const std::size_t n = graph.num_vertices();

  std::unique_ptr<FftAutocorrelation> fft;
  std::unique_ptr<VectorBins> profile_bins;
  std::vector<double> autocorr;
  int lattice_L = 0, lattice_d = 0;
  if (obs.axis_profile || obs.full_profile) {
    const auto& lattice = periodic_lattice(graph, "a two-point profile");
    lattice_L = lattice.L;
    lattice_d = lattice.d;
    fft = std::make_unique<FftAutocorrelation>(lattice.d, lattice.L);
    autocorr.resize(n);
    if (obs.full_profile) profile_bins = std::make_unique<VectorBins>(n, measured, config.bins);
  }
  const std::size_t axis_count = obs.axis_profile ? static_cast<std::size_t>(lattice_L / 2 + 1) : 0;
  std::vector<std::vector<double>> axis_samples(axis_count);

  BlockLayout blocks;
  if (obs.block_side) {
    blocks = make_blocks(graph, *obs.block_side);
    result.block_convention = blocks.convention;
  }
  std::vector<double> block_m(blocks.num_blocks);
  std::vector<double> block_m2_samples, block_m4_samples;

  std::vector<std::vector<double>> pair_samples(obs.pairs.size());
  std::vector<double> m2_samples, m4_samples;
  // Per quadruple: S4 then the six pair products (12,34,13,24,14,23).
  std::vector<std::array<std::vector<double>, 7>> quad_samples(obs.quadruples.size());

  for (std::size_t t = 0; t < measured; ++t) {
    sweep();
    const auto spins = system.spins();
    for (std::size_t i = 0; i < obs.pairs.size(); ++i)
      pair_samples[i].push_back(spins[obs.pairs[i].first] * spins[obs.pairs[i].second]);
    if (obs.magnetization) {
      double mag = 0.0;
      for (auto s : spins) mag += s;
      const double m = mag / static_cast<double>(n);
      m2_samples.push_back(m * m);
      m4_samples.push_back(m * m * m * m);
    }
    if (fft) {
      fft->compute(spins, autocorr);
      if (profile_bins) profile_bins->add(t, autocorr);
      std::size_t stride = 1;
      std::vector<double> axis(axis_count, 0.0);
      for (int k = lattice_d - 1; k >= 0; --k) {
        for (std::size_t r = 0; r < axis_count; ++r) axis[r] += autocorr[r * stride];
        stride *= static_cast<std::size_t>(lattice_L);
      }
      for (std::size_t r = 0; r < axis_count; ++r)
        axis_samples[r].push_back(axis[r] / static_cast<double>(lattice_d));
    }
    if (obs.block_side) {
      std::fill(block_m.begin(), block_m.end(), 0.0);
      for (Vertex v = 0; v < n; ++v)
        if (blocks.block_of[v] >= 0) block_m[static_cast<std::size_t>(blocks.block_of[v])] += spins[v];
      double s2 = 0.0, s4 = 0.0;
      for (double mb : block_m) {
        s2 += mb * mb;
        s4 += mb * mb * mb * mb;
      }
      block_m2_samples.push_back(s2 / static_cast<double>(blocks.num_blocks));
      block_m4_samples.push_back(s4 / static_cast<double>(blocks.num_blocks));
      if (obs.keep_block_samples) result.block_samples.push_back(block_m[0]);
    }
    for (std::size_t i = 0; i < obs.quadruples.size(); ++i) {
      const auto& q = obs.quadruples[i];
      const double a = spins[q[0]], b = spins[q[1]], c = spins[q[2]], d = spins[q[3]];
      auto& qs = quad_samples[i];
      qs[0].push_back(a * b * c * d);
      qs[1].push_back(a * b);
      qs[2].push_back(c * d);
      qs[3].push_back(a * c);
      qs[4].push_back(b * d);
      qs[5].push_back(a * d);
      qs[6].push_back(b * c);
    }
  }

  const std::size_t bins = config.bins;
  const std::uint64_t seed = config.seed;
  auto& est = result.estimates;
  for (std::size_t i = 0; i < obs.pairs.size(); ++i)
    est[pair_name("S2", obs.pairs[i].first, obs.pairs[i].second)] =
        binned_estimate(pair_samples[i], bins, seed);
  if (obs.magnetization) {
    est["m2"] = binned_estimate(m2_samples, bins, seed);
    est["m4"] = binned_estimate(m4_samples, bins, seed);
    est["binder"] = jackknife_estimate(
        {m2_samples, m4_samples}, bins,
        [](std::span<const double> m) { return 1.0 - m[1] / (3.0 * m[0] * m[0]); }, seed);
    if (est["binder"].mean > kBinderMax + 1e-12)
      throw std::logic_error("Binder cumulant above 2/3");
  }
  for (std::size_t r = 0; r < axis_count; ++r)
    est["S2_axis[" + std::to_string(r) + "]"] = binned_estimate(axis_samples[r], bins, seed);
  if (profile_bins) {
    result.profile = profile_bins->estimates(seed);
    result.profile_bins = profile_bins->bin_means();
    est["xi_2nd"] = second_moment_length(*graph.lattice(), result.profile_bins, seed);
  }
  if (obs.block_side) {
    est["block_M2"] = binned_estimate(block_m2_samples, bins, seed);
    est["block_M4"] = binned_estimate(block_m4_samples, bins, seed);
    est["block_T4"] = jackknife_estimate(
        {block_m2_samples, block_m4_samples}, bins,
        [](std::span<const double> m) { return m[1] / (m[0] * m[0]); }, seed);
    est["R"] = jackknife_estimate(
        {block_m2_samples, block_m4_samples}, bins,
        [](std::span<const double> m) { return 3.0 - m[1] / (m[0] * m[0]); }, seed);
  }
  for (std::size_t i = 0; i < obs.quadruples.size(); ++i) {
    const auto& qs = quad_samples[i];
    const std::vector<std::span<const double>> series(qs.begin(), qs.end());
    auto u4 = [](std::span<const double> m) {
      return m[0] - (m[1] * m[2] + m[3] * m[4] + m[5] * m[6]);
    };
    est[quad_name("S4", obs.quadruples[i])] = binned_estimate(qs[0], bins, seed);
    est[quad_name("U4", obs.quadruples[i])] = jackknife_estimate(series, bins, u4, seed);
    est[quad_name("square_margin", obs.quadruples[i])] = jackknife_estimate(
        series, bins, [&](std::span<const double> m) { return std::abs(u4(m)) - m[3] * m[4]; },
        seed);
    est[quad_name("pfaffian_residual", obs.quadruples[i])] = jackknife_estimate(
        series, bins,
        [](std::span<const double> m) {
          return std::abs(m[0] - (m[1] * m[2] - m[3] * m[4] + m[5] * m[6])) / m[0];
        },
        seed);
  }
  return result;
}

WormSampler::WormSampler(std::shared_ptr<const CouplingGraph> graph, double beta,
                         std::vector<Vertex> sources, std::uint64_t seed, std::uint64_t stream)
    : graph_(std::move(graph)), beta_(beta), sources_(std::move(sources)), rng_(seed, stream) {
  if (!graph_) throw McError("worm sampler needs a graph");
  const CouplingGraph& g = *graph_;
  if (g.num_vertices() == 0) throw McError("graph has no vertices");
  if (!g.ferromagnetic()) throw McError("couplings must be ferromagnetic");
  if (sources_.size() % 2 != 0) throw McError("source set must have even cardinality");
  beta_j_.resize(g.num_edges());
  for (std::size_t e = 0; e < g.num_edges(); ++e) beta_j_[e] = beta_ * g.edge(e).J;

  std::vector<std::uint8_t> target(g.num_vertices(), 0);
  for (Vertex v : sources_) {
    check_vertex(g, v);
    target[v] ^= 1u;
  }
  state_.occupation.assign(g.num_edges(), 0);
  parity_.assign(g.num_vertices(), 0);
  // Pair up the odd vertices and join each pair by a shortest path of active edges.
  std::vector<Vertex> odd;
  for (Vertex v = 0; v < g.num_vertices(); ++v)
    if (target[v]) odd.push_back(v);
  for (std::size_t i = 0; i + 1 < odd.size(); i += 2) {
    const Vertex from = odd[i], to = odd[i + 1];
    std::vector<std::int64_t> via(g.num_vertices(), -1);
    std::vector<std::uint8_t> seen(g.num_vertices(), 0);
    std::deque<Vertex> queue{from};
    seen[from] = 1;
    while (!queue.empty() && !seen[to]) {
      const Vertex v = queue.front();
      queue.pop_front();
      for (const Incidence& inc : g.neighbors(v)) {
        if (seen[inc.neighbor] || beta_j_[inc.edge] <= 0.0) continue;
        seen[inc.neighbor] = 1;
        via[inc.neighbor] = inc.edge;
        queue.push_back(inc.neighbor);
      }
    }
    if (!seen[to])
      throw McError("empty sector: sources " + std::to_string(from) + " and " +
                    std::to_string(to) + " are not connected by active edges");
    for (Vertex v = to; v != from;) {
      const auto e = static_cast<std::size_t>(via[v]);
      ++state_.occupation[e];
      v = g.edge(e).u == v ? g.edge(e).v : g.edge(e).u;
    }
  }
  for (std::size_t e = 0; e < g.num_edges(); ++e)
    if (state_.occupation[e] & 1u) {
      parity_[g.edge(e).u] ^= 1u;
      parity_[g.edge(e).v] ^= 1u;
    }
  steps_per_sweep_ = std::max<std::size_t>(2, 2 * g.num_edges());
}

void WormSampler::step() {
  const CouplingGraph& g = *graph_;
  const std::uint64_t bits = rng_();
  if (bits & 1u) {
    if (state_.closed()) {
      const auto v = static_cast<Vertex>(rng_.below(g.num_vertices()));
      state_.head = v;
      state_.tail = v;
    }
    return;
  }
  const Vertex head = state_.head;
  const std::size_t deg = g.degree(head);
  if (deg == 0) return;
  const Incidence inc = g.neighbors(head)[rng_.below(deg)];
  const bool increment = (bits >> 1) & 1u;
  const std::uint32_t n = state_.occupation[inc.edge];
  double ratio;
  if (increment) {
    ratio = beta_j_[inc.edge] / (static_cast<double>(n) + 1.0);
  } else {
    if (n == 0) return;
    ratio = static_cast<double>(n) / beta_j_[inc.edge];
  }
  ratio *= static_cast<double>(deg) / static_cast<double>(g.degree(inc.neighbor));
  if (ratio < 1.0 && !(rng_.uniform() < ratio)) return;
  state_.occupation[inc.edge] = increment ? n + 1 : n - 1;
  parity_[head] ^= 1u;
  parity_[inc.neighbor] ^= 1u;
  state_.head = inc.neighbor;
}

void WormSampler::sweep() {
  for (std::size_t i = 0; i < steps_per_sweep_; ++i) step();
}

double WormSampler::stationary_weight(const CouplingGraph& graph, double beta,
                                      const WormState& s) {
  double log_w = 0.0;
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    const auto n = s.occupation[e];
    if (n == 0) continue;
    const double x = beta * graph.edge(e).J;
    if (x == 0.0) return 0.0;
    log_w += n * std::log(x) - std::lgamma(n + 1.0);
  }
  return std::exp(log_w);
}

double WormSampler::transition_probability(const CouplingGraph& graph, double beta,
                                           const WormState& from, const WormState& to) {
  if (from == to) throw McError("transition_probability needs distinct states");
  const std::size_t nv = graph.num_vertices();
  double p = 0.0;
  if (from.closed() && to.closed() && from.occupation == to.occupation)
    p += 0.5 / static_cast<double>(nv);
  if (from.tail != to.tail) return p;
  std::size_t changed = graph.num_edges();
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    if (from.occupation[e] == to.occupation[e]) continue;
    if (changed != graph.num_edges()) return p;
    changed = e;
  }
  if (changed == graph.num_edges()) return p;
  const Edge& edge = graph.edge(changed);
  const bool forward = edge.u == from.head && edge.v == to.head;
  const bool backward = edge.v == from.head && edge.u == to.head;
  if (!forward && !backward) return p;
  const auto n_from = static_cast<double>(from.occupation[changed]);
  const auto n_to = static_cast<double>(to.occupation[changed]);
  const double bj = beta * edge.J;
  double ratio;
  if (n_to == n_from + 1.0)
    ratio = bj / n_to;
  else if (n_to + 1.0 == n_from)
    ratio = n_from / bj;
  else
    return p;
  const double deg_from = static_cast<double>(graph.degree(from.head));
  const double deg_to = static_cast<double>(graph.degree(to.head));
  p += 0.5 * (1.0 / deg_from) * 0.5 * std::min(1.0, ratio * deg_from / deg_to);
  return p;
}

WormRunResult worm_run(const RunConfig& config, std::span<const Vertex> A,
                       const WormObservables& observables,
                       const std::function<void(const WormState&)>& on_closed_sample) {
  validate_run_config(config);
  if (A.size() % 2 != 0) throw McError("source set must have even cardinality");
  const CouplingGraph& graph = *config.graph;
  for (const auto& [x, y] : observables.pairs) {
    check_vertex(graph, x);
    check_vertex(graph, y);
  }
  WormSampler sampler(config.graph, config.beta, std::vector<Vertex>(A.begin(), A.end()),
                      config.seed, config.stream);
  const std::size_t thermal = thermalization_sweeps(config);
  for (std::size_t s = 0; s < thermal; ++s) sampler.sweep();

  BlockLayout blocks;
  if (observables.block_side) blocks = make_blocks(graph, *observables.block_side);

  const std::size_t measured = config.sweeps - thermal;
  const std::size_t steps = sampler.steps_per_sweep();
  std::vector<double> closed_fraction(measured), closed_count(measured);
  std::vector<std::vector<double>> pair_counts(observables.pairs.size(),
                                               std::vector<double>(measured, 0.0));
  std::vector<double> block_counts(observables.block_side ? measured : 0, 0.0);
  WormRunResult result;
  for (std::size_t t = 0; t < measured; ++t) {
    std::size_t closed = 0;
    for (std::size_t i = 0; i < steps; ++i) {
      sampler.step();
      const WormState& s = sampler.state();
      if (s.closed()) ++closed;
      for (std::size_t k = 0; k < observables.pairs.size(); ++k) {
        const auto& [x, y] = observables.pairs[k];
        if (s.tail == x && s.head == y) pair_counts[k][t] += 0.5;
        if (s.tail == y && s.head == x) pair_counts[k][t] += 0.5;
      }
      if (observables.block_side) {
        const int bt = blocks.block_of[s.tail];
        if (bt >= 0 && bt == blocks.block_of[s.head]) block_counts[t] += 1.0;
      }
    }
    closed_count[t] = static_cast<double>(closed);
    closed_fraction[t] = static_cast<double>(closed) / static_cast<double>(steps);
    if (sampler.state().closed()) {
      ++result.closed_samples;
      if (on_closed_sample) on_closed_sample(sampler.state());
    }
  }

  const std::size_t bins = config.bins;
  const double nv = static_cast<double>(graph.num_vertices());
  result.estimates["P_closed"] = binned_estimate(closed_fraction, bins, config.seed);
  auto ratio = [nv](std::span<const double> m) { return m[1] > 0.0 ? nv * m[0] / m[1] : 0.0; };
  const char* prefix = A.empty() ? "S2" : "sector_ratio";
  for (std::size_t k = 0; k < observables.pairs.size(); ++k) {
    const auto& [x, y] = observables.pairs[k];
    Estimate e;
    if (x == y) {
      e = Estimate{1.0, 0.0, bins, measured, config.seed};
    } else {
      e = jackknife_estimate({pair_counts[k], closed_count}, bins, ratio, config.seed);
    }
    result.estimates[pair_name(prefix, x, y)] = e;
  }
  if (observables.block_side) {
    const double nb = static_cast<double>(blocks.num_blocks);
    result.estimates["block_M2"] = jackknife_estimate(
        {block_counts, closed_count}, bins,
        [nv, nb](std::span<const double> m) { return m[1] > 0.0 ? nv * m[0] / (nb * m[1]) : 0.0; },
        config.seed);
  }
  return result;
}

IntersectionStats intersection_stats(const RunConfig& config, Vertex x1, Vertex x2, Vertex x3,
                                     Vertex x4) {
  validate_run_config(config);
  const CouplingGraph& graph = *config.graph;
  for (Vertex v : {x1, x2, x3, x4}) check_vertex(graph, v);
  const std::vector<std::vector<Vertex>> sources{{x1, x2}, {x3, x4}, {}, {}};
  std::vector<WormSampler> chains;
  for (std::size_t c = 0; c < 4; ++c)
    chains.emplace_back(config.graph, config.beta, sources[c], config.seed,
                        config.stream * 4 + c);
  const std::size_t thermal = thermalization_sweeps(config);
  for (auto& chain : chains)
    for (std::size_t s = 0; s < thermal; ++s) chain.sweep();

  const std::size_t n = graph.num_vertices();
  // first_mark[v] == t: v is in the first cluster of sample t; second_mark likewise.
  std::vector<std::size_t> first_mark(n, std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> second_mark(n, std::numeric_limits<std::size_t>::max());
  std::vector<Vertex> stack;
  // Visits the cluster of `root` in the union of the supports of chains a and b.
  auto walk_cluster = [&](std::size_t a, std::size_t b, Vertex root, std::vector<std::size_t>& mark,
                          std::size_t tag, auto&& visit) {
    const auto& na = chains[a].state().occupation;
    const auto& nb = chains[b].state().occupation;
    stack.assign(1, root);
    mark[root] = tag;
    while (!stack.empty()) {
      const Vertex v = stack.back();
      stack.pop_back();
      visit(v);
      for (const Incidence& inc : graph.neighbors(v)) {
        if (mark[inc.neighbor] == tag || (na[inc.edge] == 0 && nb[inc.edge] == 0)) continue;
        mark[inc.neighbor] = tag;
        stack.push_back(inc.neighbor);
      }
    }
  };

  const std::size_t measured = config.sweeps - thermal;
  std::vector<double> hit(measured), size(measured);
  for (std::size_t t = 0; t < measured; ++t) {
    for (auto& chain : chains) {
      do chain.sweep();
      while (!chain.state().closed());
    }
    walk_cluster(0, 2, x1, first_mark, t, [](Vertex) {});
    std::size_t overlap = 0;
    walk_cluster(1, 3, x3, second_mark, t, [&](Vertex v) {
      if (first_mark[v] == t) ++overlap;
    });
    hit[t] = overlap > 0 ? 1.0 : 0.0;
    size[t] = static_cast<double>(overlap);
  }

  IntersectionStats out;
  out.p_nonempty = binned_estimate(hit, config.bins, config.seed);
  out.mean_size = binned_estimate(size, config.bins, config.seed);
  out.mean_size_given_nonempty = jackknife_estimate(
      {size, hit}, config.bins,
      [](std::span<const double> m) { return m[1] > 0.0 ? m[0] / m[1] : 0.0; }, config.seed);
  return out;
}

Estimate binder_cumulant(int d, int L, double beta, std::size_t sweeps, std::uint64_t seed,
                         std::uint64_t stream, std::size_t bins) {
  RunConfig config;
  config.graph = std::make_shared<const CouplingGraph>(
      build_lattice(LatticeSpec{d, L, 1.0, Boundary::Periodic}));
  config.beta = beta;
  config.sweeps = sweeps;
  config.seed = seed;
  config.stream = stream;
  config.bins = bins;
  config.observables.magnetization = true;
  return wolff_run(config).estimates.at("binder");
}

namespace {

BetaCEstimate crossing_for_pair(int d, int small, int large, double lo, double hi,
                                const BetaCOptions& options, std::uint64_t stream_base) {
  BetaCEstimate out;
  std::uint64_t stream = stream_base;
  auto diff_at = [&](double beta) {
    const Estimate a = binder_cumulant(d, small, beta, options.sweeps, options.seed, stream++,
                                       options.bins);
    const Estimate b = binder_cumulant(d, large, beta, options.sweeps, options.seed, stream++,
                                       options.bins);
    ++out.evaluations;
    return std::pair{b.mean - a.mean, std::hypot(a.error, b.error)};
  };
  const double k = options.significance;
  auto [d_lo, s_lo] = diff_at(lo);
  auto [d_hi, s_hi] = diff_at(hi);
  if (!(d_lo < -k * s_lo && d_hi > k * s_hi))
    throw NoCrossing("no Binder crossing between beta = " + std::to_string(lo) + " and " +
                     std::to_string(hi) + " for sizes " + std::to_string(small) + " and " +
                     std::to_string(large));
  for (int i = 0; i < options.max_bisections; ++i) {
    if (hi - lo < options.relative_tolerance * 0.5 * (hi + lo)) break;
    const double mid = 0.5 * (lo + hi);
    (diff_at(mid).first < 0.0 ? lo : hi) = mid;
  }
  out.beta_c = 0.5 * (lo + hi);
  out.half_width = 0.5 * (hi - lo);
  return out;
}

}  // namespace

BetaCEstimate locate_beta_c(int d, std::span<const int> sizes, double beta_lo, double beta_hi,
                            const BetaCOptions& options) {
  if (sizes.size() < 2) throw McError("locate_beta_c needs at least two sizes");
  if (!(beta_lo < beta_hi) || beta_lo < 0.0) throw McError("invalid beta bracket");
  std::vector<int> sorted(sizes.begin(), sizes.end());
  std::sort(sorted.begin(), sorted.end());
  BetaCEstimate combined;
  std::vector<BetaCEstimate> parts;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i] == sorted[i + 1]) throw McError("sizes must be distinct");
    parts.push_back(crossing_for_pair(d, sorted[i], sorted[i + 1], beta_lo, beta_hi, options,
                                      1000 * (i + 1)));
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : parts) {
    combined.beta_c += p.beta_c / static_cast<double>(parts.size());
    combined.half_width = std::max(combined.half_width, p.half_width);
    combined.evaluations += p.evaluations;
    lo = std::min(lo, p.beta_c);
    hi = std::max(hi, p.beta_c);
  }
  combined.half_width = std::max(combined.half_width, 0.5 * (hi - lo));
  return combined;
}

}  // namespace rcising
