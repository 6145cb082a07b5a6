#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hflab {

// A lattice point of Z^d.
using Site = std::vector<int>;

long long l1_norm(const Site& a);
long long l1_dist(const Site& a, const Site& b);

// The two metrics the constants machinery supports: the l1 graph metric and
// kappa*log(1 + l1), which turns exponential kernel envelopes into
// polynomially decaying ones.
struct Metric {
  enum class Kind { ell1, scaled_log };
  Kind kind = Kind::ell1;
  double kappa = 1.0;

  double operator()(const Site& a, const Site& b) const;
  // distance as a function of the l1 separation (both kinds are functions of
  // it, which shell sums exploit)
  double from_l1(long long r) const;
  // metric length of one lattice step
  double unit_step() const { return from_l1(1); }
  std::string name() const;
};

// Finite box Lambda_L = [-L, L]^d with a deterministic lexicographic site
// enumeration; index 0 is (-L, ..., -L).
class Box {
 public:
  Box(int dim, int half_width, long long site_cap = 2'000'000);

  int dim() const { return dim_; }
  int half_width() const { return half_width_; }
  int size() const { return static_cast<int>(sites_.size()); }
  const Site& site(int index) const { return sites_[index]; }
  const std::vector<Site>& sites() const { return sites_; }

  bool contains(const Site& s) const;
  int index_of(const Site& s) const;  // throws std::out_of_range if outside

  // nearest-neighbor pairs (i, j) with i < j, both inside the box
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

 private:
  int dim_;
  int half_width_;
  std::vector<Site> sites_;
  std::vector<std::pair<int, int>> edges_;
};

Box make_box(int dim, int half_width);

// Number of sites of Z^d at l1 distance exactly k from a point.
std::uint64_t l1_sphere_count(int dim, long long k);

struct ExpSumResult {
  double value = 0.0;       // truncated shell sum
  double tail_bound = 0.0;  // certified bound on the discarded tail
  long long radius = 0;     // truncation radius actually used
};

// S_beta = sup_u sum_v exp(beta d(u, v)) over the infinite lattice. Both
// supported metrics are translation invariant so the supremum is attained at
// every center. Expands the truncation radius until the analytic tail bound
// drops below tol. Throws std::domain_error when the sum diverges
// (beta >= 0 for ell1; kappa*|beta| <= dim for scaled_log).
ExpSumResult exp_sum(const Metric& metric, int dim, double beta,
                     double tol = 1e-10, long long radius_cap = 8'000'000);

// Finite-box variant: sum_{v in box} exp(beta d(center, v)).
double exp_sum_box(const Metric& metric, double beta, const Site& center,
                   const Box& box);
// and its supremum over centers in the box
double exp_sum_box_sup(const Metric& metric, double beta, const Box& box);

// Augmented boundary of the box: sites at graph distance one from the box or
// from its complement. Sorted lexicographically.
std::vector<Site> augmented_boundary(const Box& box);

// min over u in augmented_boundary(box) of d(s, u)
double metric_dist_to_boundary(const Metric& metric, const Site& s,
                               const Box& box);

}  // namespace hflab
