#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hflab/lattice.hpp"

namespace hflab {

// Site disorder distribution. The three production families all have full
// support on R; the uniform kind exists so tests can exercise the failure
// paths of the assumption checkers.
class DisorderModel {
 public:
  enum class Kind {
    cauchy,
    two_sided_exponential,
    perturbed_exponential,
    uniform_test,
  };

  static DisorderModel cauchy(double scale);
  static DisorderModel two_sided_exponential(double c_rho);
  // rho(v) = C (1 + eps |v|^k) exp(-alpha|v|) exp(-c|v|)
  static DisorderModel perturbed_exponential(double c, double alpha, double k,
                                             double eps);
  static DisorderModel uniform(double half_width);

  Kind kind() const { return kind_; }
  std::string name() const;

  double density(double v) const;
  double log_density(double v) const;  // -inf outside support
  double cdf(double v) const;
  double quantile(double p) const;
  double sup_density() const;

  // |v| beyond which the two-sided tail mass is below `mass`
  double tail_radius(double mass) const;

  // assumption-(7) envelope rho = h(v) exp(-c_rho |v|)
  bool has_exponential_envelope() const;
  double c_rho() const;
  double envelope_h(double v) const;

  // declared regularity constants (assumptions (6)/(7)); defaults are set per
  // family at construction and may be overridden
  double c1() const { return c1_; }
  double eps1() const { return eps1_; }
  double eps2() const { return eps2_; }
  void declare_constants(double c1, double eps1, double eps2);

  // kind-specific raw parameters, in factory order (serialization support)
  std::vector<double> params() const;

 private:
  DisorderModel() = default;
  void finalize_defaults();
  void build_cdf_table() const;

  Kind kind_ = Kind::two_sided_exponential;
  double p1_ = 1.0, p2_ = 0.0, p3_ = 0.0, p4_ = 0.0;
  double norm_ = 1.0;  // perturbed_exponential normalizer
  double c1_ = 1.0, eps1_ = 0.1, eps2_ = 0.01;
  // lazily built numeric CDF table (perturbed_exponential only)
  mutable std::shared_ptr<std::vector<double>> cdf_grid_;
  mutable std::shared_ptr<std::vector<double>> cdf_val_;
  mutable double cdf_lo_ = 0.0, cdf_hi_ = 0.0;
};

struct Realization {
  std::vector<double> values;  // indexed like the box enumeration
  std::uint64_t seed = 0;

  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
};

// i.i.d. draws, one per site, via inverse CDF. The per-site stream is keyed
// by the site coordinates (not the box index), so nested boxes sampled with
// the same seed agree on their common region.
Realization sample(const DisorderModel& model, std::uint64_t seed,
                   const Box& box);

struct AssumptionReport {
  bool pass = false;
  double constant_found = 0.0;  // smallest working c1 (resp. eps2) on the grid
  double fluct_sup = 0.0;       // assumption (6) only
  std::vector<std::pair<double, double>> violations;
  std::string detail;
};

// Assumption (6): log-density Lipschitz ratio bound plus finiteness of the
// smoothed-density supremum at the declared eps1. Grid-based certificate.
AssumptionReport check_assumption6(const DisorderModel& model,
                                   double v_max = 20.0, int n_grid = 321);

// Assumption (7): exponential envelope with log-Lipschitz h and
// eps2 in (0, c_rho/2).
AssumptionReport check_assumption7(const DisorderModel& model,
                                   double v_max = 20.0, int n_grid = 321);

// sup_v rho(v) / int rho(a) e^{-eps1 |v-a|} da  (the assumption-(6)
// fluctuation functional; increasing in eps1, -> sup rho as eps1 -> 0)
double fluctuation_sup(const DisorderModel& model, double eps1,
                       double v_max = 20.0, int n_grid = 321);

}  // namespace hflab
