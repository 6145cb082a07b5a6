#pragma once

#include <functional>
#include <vector>

#include "hflab/effpot.hpp"

namespace hflab {

// omega -> U change of variables on a site subset (box indices; empty means
// the full box). The Jacobian of T is I + (g/lambda) dV_eff/d omega restricted
// to the subset; the conditional-density Jacobians J_U are its inverse
// determinants.
struct ChangeOfVariables {
  std::vector<int> sites;      // box indices of Lambda'
  std::vector<double> u;       // U(n) on Lambda'
  Eigen::MatrixXd jacobian;    // DT block
  double det = 1.0;
  double log_det = 0.0;
};

ChangeOfVariables forward_map(const HamiltonianSpec& spec,
                              const Realization& omega,
                              const EffectivePotentialSolution& sol,
                              const Eigen::MatrixXd& derivative,
                              const std::vector<int>& sites = {});

// Inverse of T on the full box by fixed-point iteration; returns omega.
std::vector<double> inverse_map(const HamiltonianSpec& spec,
                                const std::vector<double>& u,
                                double tol = 1e-12);

struct ConditionalDensityOptions {
  double quad_tol = 1e-8;
  double tail_mass = 1e-10;  // certified alpha-truncation target
};

struct ConditionalDensityEstimate {
  int n0 = 0;                      // box index of the resampled site
  std::vector<double> v_grid;
  std::vector<double> rho;         // rho_eff on the grid
  std::vector<double> log_numerator;  // log N(v), Z-independent
  double log_z = 0.0;
  double normalization_residual = 0.0;
  double alpha_lo = 0.0, alpha_hi = 0.0;
};

// Conditional density of U(n0) given the other U values of the realization,
// assembled from resample solves, density products and Jacobian determinants,
// with the alpha-normalization integral done by adaptive quadrature.
ConditionalDensityEstimate conditional_density(
    const HamiltonianSpec& spec, const Realization& omega, int n0_box_index,
    const std::vector<double>& v_grid, const ConditionalDensityOptions& opt = {});

// log of the unnormalized conditional density at U(n0) = v (shared by the
// grid estimator and the ratio checks)
double conditional_log_numerator(const HamiltonianSpec& spec,
                                 const Realization& omega,
                                 const EffectivePotentialSolution& base,
                                 int n0_box_index, double v);

struct MInfinityEstimate {
  double empirical_max = 0.0;     // max over sampled (omega, n0, v)
  double analytic_bound = 0.0;    // e^vartheta fluctuation_sup(eps1)
  double analytic_bound_tight = 0.0;  // e^vartheta sup rho
};

MInfinityEstimate estimate_m_infinity(const HamiltonianSpec& spec,
                                      int realizations,
                                      const std::vector<int>& n0_list,
                                      const std::vector<double>& v_grid,
                                      std::uint64_t seed);

// Decoupling-constant table: D_{s,1}(s) = sup_z psi_s(z)/phi_s(z) over a
// (Re z, Im z) grid. The density is any callable with certified tail
// envelope rho(v) <= tail_prefactor * exp(-tail_rate |v|) for |v| > window.
struct DecouplingOptions {
  double window = 25.0;
  double tail_prefactor = 0.5;
  double tail_rate = 1.0;
  double quad_tol = 1e-8;
  int z_points_per_decade = 3;
};

struct DecouplingTable {
  std::vector<double> s;
  std::vector<double> d_s1;
  std::vector<double> argmax_re_z;
};

DecouplingTable estimate_d_s1(const std::function<double(double)>& rho,
                              const std::vector<double>& s_grid,
                              const DecouplingOptions& opt = {});

// tau-regularity of a density given on a uniform grid: window inequality,
// pointwise ratio bound with the c1(1 +- vartheta) rates, and fitted
// regular-q-decay constants.
struct TauRegularityReport {
  bool ratio_ok = true;
  bool window_ok = true;
  int ratio_violations = 0;
  int window_violations = 0;
  double window_constant = 0.0;  // e^{2 c1 (1+vartheta)} used in the check
  std::vector<std::pair<double, double>> q_decay;  // (q, fitted C)
};

TauRegularityReport tau_regularity_check(const std::vector<double>& v_grid,
                                         const std::vector<double>& rho,
                                         double c1, double vartheta,
                                         std::uint64_t seed = 7);

}  // namespace hflab
