#pragma once

#include <cstdint>
#include <vector>

#include "hflab/lattice.hpp"

namespace hflab {

// Exact self-avoiding walk counts on Z^d up to length n_max, with optional
// endpoint-resolved counters for the correlation function.
struct SawTable {
  int dim = 0;
  int n_max = 0;
  std::vector<std::uint64_t> counts;       // C_N, N = 0..n_max
  bool has_endpoints = false;
  // endpoint_counts[N] is indexed like Box(dim, n_max): #walks of length N
  // from the origin ending at the site
  std::vector<std::vector<std::uint64_t>> endpoint_counts;
};

// Depth-first enumeration with a flat visited array (the fast route).
// Throws std::length_error when 2d(2d-1)^{N-1} exceeds the node budget.
SawTable saw_enumerate(int dim, int n_max, bool with_endpoints = false,
                       double node_budget = 6.0e8);

// Independent second enumerator: different traversal order and a hash-set
// visited structure. Counts only.
std::vector<std::uint64_t> saw_enumerate_hashset(int dim, int n_max,
                                                 double node_budget = 6.0e8);

struct SeriesValue {
  double value = 0.0;
  double tail_bound = 0.0;  // from C_{N+k} <= C_N (2d)(2d-1)^{k-1}
  bool tail_certified = false;
  bool diverged = false;
};

// C_gamma(m) = sum_N gamma^N #S_N(0, m), truncated at the table length.
SeriesValue saw_correlation(const SawTable& table, double gamma, const Site& m);

// chi(gamma) = sum_N C_N gamma^N with certified tail when (2d-1)gamma < 1.
struct SusceptibilityResult {
  double value = 0.0;
  double tail_bound = 0.0;
  bool tail_certified = false;
  bool diverged = false;          // gamma at or beyond 1/mu_hat
  std::vector<double> partial;    // partial sums by N
};
SusceptibilityResult saw_susceptibility(const SawTable& table, double gamma);

struct ConnectiveEstimate {
  std::vector<double> roots;   // C_N^{1/N}
  std::vector<double> ratios;  // C_{N+1}/C_N
  double mu_hat = 0.0;         // final ratio, an estimate not a claim
};
ConnectiveEstimate connective_estimate(const SawTable& table);

}  // namespace hflab
