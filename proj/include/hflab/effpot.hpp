#pragma once

#include <map>
#include <string>
#include <vector>

#include "hflab/hamiltonian.hpp"

namespace hflab {

// f = F_+ + F_- - D*F with F_pm the boundary values on the strip edges and D
// the Poisson kernel of half-width eta. With this f,
//   F(H) = (1/2 pi i) int (G(t+i eta) - G(t-i eta)) f(t) dt,
// which is the contour representation behind every constant in the module.
class TransformedF {
 public:
  TransformedF(const FSpec& f, double tol = 1e-11);
  double operator()(double t) const;
  double poisson(double u) const;  // D(u) = eta / (pi (eta^2 + u^2))
  double poisson_smooth(double t) const;  // (D*F)(t)
  double sup_bound() const;               // 3 ||F||_inf
  const FSpec& fspec() const { return f_; }

 private:
  FSpec f_;
  double tol_;
  // repeated-node memo for the quadrature drivers (single-threaded use)
  mutable std::map<double, double> cache_;
};

// diagonal of F(H): spectral route (primary) and contour route (validation)
std::vector<double> f_of_h_spectral(const FSpec& f, const AssembledOperator& op);
std::vector<double> f_of_h_contour(const FSpec& f, const AssembledOperator& op,
                                   double tol = 1e-8);

// Phi(V)(n) = sum_m a(n,m) <delta_m, F(A + lambda omega + g V) delta_m>
std::vector<double> phi_map(const HamiltonianSpec& spec,
                            const Realization& omega,
                            const std::vector<double>& v);

struct FixedPointOptions {
  double tol = 1e-12;
  int max_iterations = 200;
  bool allow_outside_regime = false;  // warn-and-proceed past the proven bound
  std::vector<double> start;          // empty = start from zero
};

struct EffectivePotentialSolution {
  std::vector<double> v_eff;
  int iterations = 0;              // accepted update steps
  std::vector<double> residuals;   // sup-norm residual per update
  double contraction_estimate = 0; // median residual ratio
  double final_residual = 0;
  bool outside_proven_regime = false;
};

EffectivePotentialSolution solve_fixed_point(const HamiltonianSpec& spec,
                                             const Realization& omega,
                                             const FixedPointOptions& opt = {});

// dF(H)(m,m)/d(diagonal perturbation at l), assembled from divided
// differences of F over the spectrum; equals the contour-integral kernel
// r_L(m,l) up to sign conventions and is validated against it in tests.
Eigen::MatrixXd response_matrix_spectral(const FSpec& f,
                                         const AssembledOperator& op);
Eigen::MatrixXd response_matrix_contour(const FSpec& f,
                                        const AssembledOperator& op,
                                        double tol = 1e-8);

// D(n, l) = dV_eff(n)/d omega(l) on the full box, from the self-consistent
// linear system (I - g A M) D = lambda A M.
Eigen::MatrixXd derivative_matrix(const HamiltonianSpec& spec,
                                  const Realization& omega,
                                  const EffectivePotentialSolution& sol);

// Constants ledger: nu, the exponential sums, C1, C2, contraction bound,
// vartheta/theta and the per-lemma smallness booleans.
struct ValidityReport {
  double eta = 0, nu = 0, f_inf = 0;
  double delta6 = 0, delta8 = 0, delta9 = 0, delta0 = 0;
  double C1 = 0, C2 = 0;
  double b_contraction = 0;   // Lipschitz bound for Phi
  double b2_lemma6 = 0;       // (C_a 72 sqrt2 |F|/eta) |g| S_{d6-ga} S_{d6-2nu}
  double b2_lemma7 = 0;       // (|g|/lambda) C1
  double b2_lemma8 = 0;       // (C_a 72 sqrt2 |F|/eta) |g| S_{(d8-d0)/2} S_{-d0/2}
  double b2_lemma9 = 0;       // (C_a 72 sqrt2 |F|/eta) |g| S_{d9-ga} S_{d9-nu}
  double v_inf_bound = 0;     // C_a S_{-ga} 18 sqrt2 |F|
  double vartheta = 0;        // conditional-density tilt exponent
  double theta = 0;           // 2(|g|/l) c1 C1 + 4 C2 S^2_{-d8/2}
  double jacobian_bound = 0;  // 4 C2 S^2_{-d8/2}
  double m_inf_bound = 0;       // e^vartheta * fluctuation_sup(eps1)
  double m_inf_bound_tight = 0; // e^vartheta * sup рho (eps1 -> 0 limit)
  bool contraction_ok = false;
  bool lemma6_ok = false, lemma7_ok = false, lemma8_ok = false,
       lemma9_ok = false;
  bool jacobian_quarter_ok = false;  // (|g|/lambda) C1 < 1/4
  bool lemma10_ok = false;           // theta < eps2/2 (envelope models only)
  bool core_ok = false;              // contraction + lemmas 6..9
  std::map<std::string, double> s_values;

  std::vector<std::pair<std::string, double>> flat() const;
};

ValidityReport validity_check(const HamiltonianSpec& spec);

// Resampling at n0: finds omega_alpha with
//   U_alpha(n) = omega_alpha(n) + (g/lambda) V_eff,omega_alpha(n),
// where U_alpha equals the base U except for the value alpha at n0.
struct ResampleResult {
  Realization omega_alpha;
  EffectivePotentialSolution solution;
  int outer_iterations = 0;
};

ResampleResult resample_map(const HamiltonianSpec& spec,
                            const Realization& omega,
                            const EffectivePotentialSolution& base,
                            int n0_box_index, double alpha, double tol = 1e-12);

// full potential U = omega + (g/lambda) V_eff
std::vector<double> full_potential(const HamiltonianSpec& spec,
                                   const Realization& omega,
                                   const std::vector<double>& v_eff);

}  // namespace hflab
