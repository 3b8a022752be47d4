#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rcising/graph.hpp"

namespace rcising {

/// One graph of the random verification corpus.
struct CorpusInstance {
  std::size_t index = 0;
  CouplingGraph graph;
  double beta = 0.0;
};

struct CorpusOptions {
  std::uint64_t seed = 20'240'917;
  std::size_t count = 200;
  std::size_t min_vertices = 2;
  std::size_t max_vertices = 6;
  std::size_t max_edges = 8;
  double max_coupling = 2.0;
  double max_beta = 2.0;
};

/// Connected random graphs with J in (0, max_coupling) and beta in (0, max_beta).
/// Instance i depends only on (seed, i).
std::vector<CorpusInstance> random_corpus(const CorpusOptions& options);
CorpusInstance corpus_instance(const CorpusOptions& options, std::size_t index);

/// One equality or inequality evaluated on one instance. For inequalities
/// lhs <= rhs is asserted; residual is the relative violation (0 when satisfied).
struct Check {
  std::string name;
  std::size_t instance = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  bool passed = false;
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;
  std::size_t instances = 0;

  std::size_t failures() const;
  bool passed() const { return failures() == 0; }
  /// Worst residual per check name.
  std::map<std::string, double> worst() const;
  double worst_overall() const;
};

/// |lhs - rhs| / max(|lhs|, |rhs|, scale); 0 when all three vanish.
double relative_residual(double lhs, double rhs, double scale = 0.0);

Check equality_check(std::string name, std::size_t instance, double lhs, double rhs,
                     double tolerance, double scale = 0.0);
Check inequality_check(std::string name, std::size_t instance, double lhs, double rhs,
                       double tolerance, double scale = 0.0);

/// Random-current identities on every corpus instance: partition function,
/// source insertion, percolation, hitting, truncated two-pair, both U4 lines.
SuiteReport identity_suite(const std::vector<CorpusInstance>& corpus, double tolerance = 1e-10);

/// Switching identity with sub-graphs G2 of G1 (proper on two thirds of the
/// instances) and F alternating between 1 and a connectivity indicator.
SuiteReport switching_suite(const std::vector<CorpusInstance>& corpus, double tolerance = 1e-10);

/// Four-replica bound, tree bound, balanced tree bound (plain and decorated),
/// box hitting bound, Wick gap for 2n = 4, 6, generating-function gap, U4 sign
/// and the range of R.
SuiteReport inequality_suite(const std::vector<CorpusInstance>& corpus, double tolerance = 1e-10);

struct PfaffianSuiteOptions {
  std::vector<std::pair<int, int>> grids = {{2, 2}, {2, 3}, {3, 3}, {3, 4}, {4, 4}};
  std::vector<double> betas = {0.2, 0.4, 0.7};
  std::vector<std::size_t> point_counts = {4, 6};
  std::size_t subsets_per_case = 24;
  std::uint64_t seed = 7;
  double tolerance = 1e-9;
};

/// Boundary Pfaffian residuals on free planar grids, the planar U4 identity
/// for four boundary points and the crossing-sign example with two crossings.
SuiteReport pfaffian_suite(const PfaffianSuiteOptions& options = {});

/// Free rows x cols grid with unit coupling, coordinate embedding and the
/// outer cycle marked as boundary face.
CouplingGraph free_grid(int rows, int cols, double J = 1.0);

}  // namespace rcising
