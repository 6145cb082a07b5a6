#pragma once

#include <vector>

#include "hflab/effpot.hpp"
#include "hflab/regularity.hpp"

namespace hflab {

// Gamma(s) = (2M)^s / ((1-s) lambda^s), the single-step factor of the
// self-avoiding-walk expansion of fractional moments.
double gamma_factor(double s, double lambda, double m_inf);

// s0 = 1 - 1/ln(lambda/2M), the minimizer of Gamma; requires lambda/2M > e.
double optimal_exponent(double lambda, double m_inf);

struct ThresholdResult {
  double lambda_star = 0.0;
  double residual = 0.0;     // |lambda - 2 M mu e ln(lambda/2M)|
  double m = 0.0, mu = 0.0;
  bool tangent = false;      // mu == 1 double root
  bool branch_ok = false;    // derivative of x - mu e ln x nonnegative at root
  double bracket_lo = 0.0, bracket_hi = 0.0;
};

// Larger root of lambda = 2 M mu e ln(lambda / 2M). Reduces to x = mu e ln x
// in x = lambda/2M; for mu = 1 the equation is tangent at x = e. Throws when
// mu < 1 (no root).
ThresholdResult solve_threshold(double m_inf, double mu);

struct WeakThresholdRow {
  double s = 0.0, mu = 0.0;
  double worst_e = 0.0;       // argmin over the energy grid
  double sum = 0.0;           // sup_delta sum_v |G0|^s e^{mu |v|}
  double tail_bound = 0.0;
  bool certified = false;     // mu < s * (free CT rate) so the tail closes
  double lambda_hat = 0.0;
};

struct WeakThresholdResult {
  double lambda0 = 0.0;
  double best_s = 0.0, best_mu = 0.0;
  std::vector<WeakThresholdRow> rows;
};

// lambda0 = sup_s sup_mu inf_E (D_{s,1} sup_delta sum_v |G0(0,v;E+i d)|^s
// e^{mu|v|})^{-1/s}. The u-supremum collapses to u = 0 by translation
// invariance of A. Energies must avoid [-2d, 2d].
WeakThresholdResult weak_threshold(double e_lo, double e_hi, int e_points,
                                   const DecouplingTable& decoupling, int dim,
                                   const std::vector<double>& mu_grid,
                                   const std::vector<double>& delta_grid,
                                   double accuracy = 1e-9);

struct StabilityRow {
  double g = 0.0;
  double vartheta = 0.0;
  double m_inf = 0.0;      // analytic bound feeding the threshold
  double lambda_hf = 0.0;
  double lambda_and = 0.0;
  double gap = 0.0;
};

// Corollary-style sweep: lambda_HF(g) against the non-interacting threshold.
std::vector<StabilityRow> stability_sweep(const HamiltonianSpec& base,
                                          const std::vector<double>& g_values,
                                          double mu_d);

}  // namespace hflab
