#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "hflab/spec.hpp"

#include <Eigen/Dense>

namespace hflab {

using Complex = std::complex<double>;

// Dense symmetric restriction H^{Lambda'} of H_{omega,L}. The matrix always
// carries the full-box effective potential; sub-volume restrictions just drop
// rows and columns.
class AssembledOperator {
 public:
  AssembledOperator(Eigen::MatrixXd h, std::vector<int> box_indices);

  int size() const { return static_cast<int>(h_.rows()); }
  const Eigen::MatrixXd& matrix() const { return h_; }
  // indices into the box enumeration, one per matrix row
  const std::vector<int>& box_indices() const { return box_indices_; }
  int local_index_of_box_index(int box_index) const;  // -1 when absent

  const Eigen::VectorXd& eigenvalues() const;
  const Eigen::MatrixXd& eigenvectors() const;

  // <delta_i, (H - z)^{-1} delta_j> in local indices, via the spectral
  // decomposition. Throws when z collides with an eigenvalue.
  Complex green(int i, int j, Complex z) const;
  Eigen::MatrixXcd green_matrix(Complex z) const;
  double spectral_radius_bound() const;  // Gershgorin

 private:
  void ensure_eigen() const;
  Eigen::MatrixXd h_;
  std::vector<int> box_indices_;
  mutable std::optional<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>> eig_;
};

// H restricted to sub_sites (box indices; empty means the whole box), with
// diagonal lambda*omega(n) + g*v_eff(n) and unit nearest-neighbor hopping.
AssembledOperator assemble(const HamiltonianSpec& spec,
                           const Realization& omega,
                           const std::vector<double>& v_eff,
                           const std::vector<int>& sub_sites = {});

struct FreeGreenResult {
  Complex value{0.0, 0.0};
  double truncation_bound = 0.0;  // certified, from the Combes-Thomas tail
  int radius = 0;
};

// Green's function of the adjacency operator of Z^d, by large-box truncation
// with radius grown until the certified truncation error is below accuracy.
FreeGreenResult free_green(int dim, const Site& u, const Site& v, Complex z,
                           double accuracy = 1e-10, int radius_cap = 4096);

// One column G_0(0, .; z) on the box of the given radius, plus certificate.
struct FreeGreenColumn {
  int radius = 0;
  Eigen::VectorXcd values;  // indexed like Box(dim, radius)
  double truncation_bound = 0.0;
  double ct_rate = 0.0;  // certified exponential decay rate nu
};
FreeGreenColumn free_green_column(int dim, Complex z, int radius);

// Largest nu on a grid with sup_n sum_{|n'-n|=1} e^{nu d(n,n')} <= margin *
// eta/2 (the Combes-Thomas admissibility condition for the strip bound).
double pick_nu(const Metric& metric, int dim, double eta, double margin = 0.9);

// Decay rate for A at spectral distance dist, from the e^{nu}-1 dissipativity
// variant (works at real energies outside the spectrum too).
double free_ct_rate(int dim, double dist);

struct CombesThomasCertificate {
  bool admissible = false;  // the nu precondition held
  double nu = 0.0;
  double eta = 0.0;
  double max_ratio = 0.0;  // max over pairs/t of |G| / ((2/eta) e^{-nu d})
  int violations = 0;
  double slack = 0.0;  // 1 - max_ratio
};

// Verifies |G(u,v;t+i eta)| <= (2/eta) e^{-nu d(u,v)} on every pair and a
// t-grid spanning the spectrum.
CombesThomasCertificate combes_thomas_check(const AssembledOperator& op,
                                            const Box& box, double eta,
                                            const Metric& metric, double nu,
                                            int t_points = 21);

}  // namespace hflab
