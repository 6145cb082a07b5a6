#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include "hflab/disorder.hpp"
#include "hflab/lattice.hpp"

#include <Eigen/Dense>

namespace hflab {

// Analytic function on the strip |Im z| < eta, bounded on its closure and
// real on the real axis. fermi_dirac is the physical choice; analytic_test
// (offset + amp cos(freq z)) exists for oracle tests, including constants.
struct FSpec {
  enum class Kind { fermi_dirac, analytic_test };
  Kind kind = Kind::fermi_dirac;
  double beta = 1.0;
  double mu_bar = 0.0;
  double offset = 0.0, amp = 0.0, freq = 0.0;
  double eta = 1.0;  // strip half-width

  static FSpec fermi_dirac(double beta, double mu_bar, double eta);
  static FSpec analytic_test(double offset, double amp, double freq,
                             double eta);

  std::complex<double> eval(std::complex<double> z) const;
  double eval_real(double x) const;
  double deriv_real(double x) const;
  // sup |F| over the closed strip (closed form per kind)
  double sup_on_strip() const;
  std::string name() const;
};

// Interaction kernel a(m, n) with declared envelope |a| <= C_a e^{-gamma_a d}.
// log_polynomial is the exponential form evaluated in the scaled-log metric,
// which makes a(m, n) decay polynomially in |m - n|.
struct KernelSpec {
  enum class Kind { kronecker, nearest_neighbor, exponential, log_polynomial };
  Kind kind = Kind::kronecker;
  double C_a = 1.0;
  double gamma_a = 2.0;

  double eval(const Metric& metric, const Site& m, const Site& n) const;
  Eigen::MatrixXd matrix(const Metric& metric, const Box& box) const;
  std::string name() const;
  void validate(const Metric& metric) const;
};

// Everything that determines H_{omega,L} = A + lambda V_omega + g V_eff.
struct HamiltonianSpec {
  int dim = 1;
  int half_width = 7;
  double lambda = 10.0;
  double g = 1e-3;
  FSpec f;
  KernelSpec kernel;
  Metric metric;
  DisorderModel model = DisorderModel::two_sided_exponential(1.0);

  Box box() const { return Box(dim, half_width); }
  void validate() const;
};

// The admissible reference configuration used throughout tests and as the
// CLI default: d=1, L=7, eta=20, Fermi-Dirac at beta=pi/25, lambda=10,
// g=1e-3, Kronecker kernel, two-sided exponential disorder with unit rate.
HamiltonianSpec canonical_spec();

}  // namespace hflab
