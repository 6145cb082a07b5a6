#include <doctest.h>

#include <cmath>
#include <complex>

#include "hflab/hamiltonian.hpp"
#include "hflab/rng.hpp"

using namespace hflab;
using namespace std::complex_literals;

namespace {

HamiltonianSpec small_spec(int L, double lambda = 10.0, double g = 1e-3) {
  HamiltonianSpec s = canonical_spec();
  s.half_width = L;
  s.lambda = lambda;
  s.g = g;
  return s;
}

std::vector<double> zeros(const Box& b) {
  return std::vector<double>(static_cast<std::size_t>(b.size()), 0.0);
}

// closed-form G0 on Z: w^{|m-n|}/(2w - z), branch with |w| < 1
Complex free_green_1d(long long dist, Complex z) {
  const Complex root = std::sqrt(z * z - 4.0);
  Complex w = (z - root) / 2.0;
  if (std::abs(w) > 1.0) w = (z + root) / 2.0;
  const Complex denom = 2.0 * w - z;
  return std::pow(w, static_cast<double>(dist)) / denom;
}

}  // namespace

TEST_CASE("assemble: one-site box") {
  HamiltonianSpec s = small_spec(0, 3.0, 0.0);
  Realization om;
  om.values = {0.7};
  const AssembledOperator op = assemble(s, om, {0.0});
  CHECK(op.size() == 1);
  CHECK(op.matrix()(0, 0) == doctest::Approx(3.0 * 0.7));
}

TEST_CASE("assemble: 3-site path spectrum and symmetry") {
  HamiltonianSpec s = small_spec(1, 1.0, 0.0);
  Realization om;
  om.values = {0.0, 0.0, 0.0};
  const Box box = s.box();
  const AssembledOperator op = assemble(s, om, zeros(box));
  CHECK((op.matrix() - op.matrix().transpose()).norm() == 0.0);
  const auto& e = op.eigenvalues();
  CHECK(e(0) == doctest::Approx(-std::sqrt(2.0)));
  CHECK(e(1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(e(2) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("assemble: restriction deletes rows and columns") {
  HamiltonianSpec s = small_spec(2);
  const Box box = s.box();
  const Realization om = sample(s.model, 3, box);
  const AssembledOperator full = assemble(s, om, zeros(box));
  const AssembledOperator sub = assemble(s, om, zeros(box), {0, 1, 3, 4});
  CHECK(sub.size() == 4);
  const int keep[4] = {0, 1, 3, 4};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      CHECK(sub.matrix()(a, b) == full.matrix()(keep[a], keep[b]));
}

TEST_CASE("green: one-site closed form and symmetry") {
  HamiltonianSpec s = small_spec(0, 2.0, 0.0);
  Realization om;
  om.values = {0.5};
  const AssembledOperator op = assemble(s, om, {0.0});
  const Complex z(0.3, 0.7);
  CHECK(std::abs(op.green(0, 0, z) - 1.0 / (1.0 - z)) < 1e-14);

  HamiltonianSpec s5 = small_spec(2);
  const Box box = s5.box();
  const Realization om5 = sample(s5.model, 9, box);
  const AssembledOperator op5 = assemble(s5, om5, zeros(box));
  for (int i = 0; i < op5.size(); ++i)
    for (int j = 0; j < op5.size(); ++j)
      CHECK(std::abs(op5.green(i, j, z) - op5.green(j, i, z)) < 1e-12);
}

TEST_CASE("green: explicit 3x3 inversion oracle") {
  HamiltonianSpec s = small_spec(1, 1.0, 0.0);
  Realization om;
  om.values = {0.0, 0.0, 0.0};
  const AssembledOperator op = assemble(s, om, zeros(s.box()));
  const Complex z = 1.0i;
  Eigen::Matrix3cd m;
  m << -z, 1, 0, 1, -z, 1, 0, 1, -z;
  const Eigen::Matrix3cd inv = m.inverse();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(op.green(i, j, z) - inv(i, j)) < 1e-13);
}

TEST_CASE("green: resolvent identity and eigen reconstruction residuals") {
  HamiltonianSpec s = small_spec(3);
  const Box box = s.box();
  const Realization om = sample(s.model, 21, box);
  const AssembledOperator op = assemble(s, om, zeros(box));
  const Complex z(0.4, 1e-2);
  const Eigen::MatrixXcd g = op.green_matrix(z);
  const int n = op.size();
  const Eigen::MatrixXcd lhs =
      (op.matrix().cast<Complex>() - z * Eigen::MatrixXcd::Identity(n, n)) * g;
  CHECK((lhs - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);

  const Eigen::MatrixXd recon = op.eigenvectors() *
                                op.eigenvalues().asDiagonal() *
                                op.eigenvectors().transpose();
  CHECK((recon - op.matrix()).cwiseAbs().maxCoeff() < 1e-9);

  CHECK(g.cwiseAbs().maxCoeff() <= 1.0 / std::abs(z.imag()) + 1e-9);
}

TEST_CASE("depleted resolvent identity on random sub-volumes") {
  HamiltonianSpec s = small_spec(4);
  const Box box = s.box();
  rng::Stream st(5);
  for (int rep = 0; rep < 8; ++rep) {
    const Realization om = sample(s.model, 100 + rep, box);
    std::vector<int> sub;
    for (int i = 0; i < box.size(); ++i)
      if (st.next_uniform() < 0.75) sub.push_back(i);
    if (sub.size() < 4) continue;
    const AssembledOperator op = assemble(s, om, zeros(box), sub);
    const Complex z(0.2, 0.5);

    const int m_local = 0;
    const int m_box = op.box_indices()[0];
    std::vector<int> dep(op.box_indices().begin() + 1, op.box_indices().end());
    const AssembledOperator opd = assemble(s, om, zeros(box), dep);

    for (int n_local = 1; n_local < op.size(); ++n_local) {
      const int n_box = op.box_indices()[static_cast<std::size_t>(n_local)];
      Complex rhs(0.0, 0.0);
      for (int l = 0; l < opd.size(); ++l) {
        const int l_box = opd.box_indices()[static_cast<std::size_t>(l)];
        if (l1_dist(box.site(l_box), box.site(m_box)) == 1)
          rhs += opd.green(l, opd.local_index_of_box_index(n_box), z);
      }
      const Complex lhs = op.green(m_local, n_local, z);
      const Complex expect = -op.green(m_local, m_local, z) * rhs;
      CHECK(std::abs(lhs - expect) <= 1e-8 * (1.0 + std::abs(lhs)));
    }
  }
}

TEST_CASE("free green: d=1 closed forms") {
  const FreeGreenResult r =
      free_green(1, Site{0}, Site{0}, Complex(3.0, 0.0), 1e-10);
  CHECK(std::abs(r.value - Complex(-1.0 / std::sqrt(5.0), 0.0)) < 1e-9);

  const Complex z(0.7, 0.9);
  for (long long k : {0LL, 1LL, 3LL, 6LL}) {
    const FreeGreenResult g =
        free_green(1, Site{0}, Site{static_cast<int>(k)}, z, 1e-10);
    CHECK(std::abs(g.value - free_green_1d(k, z)) < 1e-8);
  }
}

TEST_CASE("free green: symmetry and translation invariance") {
  const Complex z(0.2, 1.1);
  const FreeGreenResult a = free_green(2, Site{0, 0}, Site{2, 1}, z, 1e-8);
  const FreeGreenResult b = free_green(2, Site{2, 1}, Site{0, 0}, z, 1e-8);
  const FreeGreenResult c = free_green(2, Site{-1, 3}, Site{1, 4}, z, 1e-8);
  CHECK(std::abs(a.value - b.value) < 1e-7);
  CHECK(std::abs(a.value - c.value) < 1e-7);
}

TEST_CASE("free green: two-radius agreement within the certificate") {
  const Complex z(4.5, 1e-3);
  const FreeGreenColumn c32 = free_green_column(1, z, 32);
  const FreeGreenColumn c64 = free_green_column(1, z, 64);
  const Box b32(1, 32);
  const Box b64(1, 64);
  const double diff = std::abs(c32.values(b32.index_of(Site{0})) -
                               c64.values(b64.index_of(Site{0})));
  CHECK(diff <= c32.truncation_bound + 1e-14);
}

TEST_CASE("combes-thomas certificate") {
  HamiltonianSpec s = small_spec(3);
  const Box box = s.box();
  const Realization om = sample(s.model, 31, box);
  const AssembledOperator op = assemble(s, om, zeros(box));

  SUBCASE("eta=10 with grid-picked nu passes with positive slack") {
    const double eta = 10.0;
    const double nu = pick_nu(s.metric, s.dim, eta);
    CHECK(nu == doctest::Approx(std::log(0.9 * 10.0 / 4.0)).epsilon(1e-2));
    const CombesThomasCertificate cert =
        combes_thomas_check(op, box, eta, s.metric, nu);
    CHECK(cert.admissible);
    CHECK(cert.violations == 0);
    CHECK(cert.slack > 0.0);
  }

  SUBCASE("diagonal bound follows from |G| <= 1/eta") {
    const double eta = 10.0;
    const Complex z(0.0, eta);
    for (int i = 0; i < op.size(); ++i)
      CHECK(std::abs(op.green(i, i, z)) <= 2.0 / eta);
  }

  SUBCASE("inadmissible nu is reported") {
    const CombesThomasCertificate cert =
        combes_thomas_check(op, box, 1.0, s.metric, 2.0);
    CHECK_FALSE(cert.admissible);
  }
}
