#include <doctest.h>

#include <cmath>
#include <limits>

#include "hflab/effpot.hpp"
#include "hflab/quadrature.hpp"
#include "hflab/rng.hpp"

using namespace hflab;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> zeros(const Box& b) {
  return std::vector<double>(static_cast<std::size_t>(b.size()), 0.0);
}

HamiltonianSpec canon(int L) {
  HamiltonianSpec s = canonical_spec();
  s.half_width = L;
  return s;
}

}  // namespace

TEST_CASE("transform_f: Poisson kernel basics") {
  const FSpec f = FSpec::fermi_dirac(kPi / 25.0, 0.0, 20.0);
  const TransformedF tf(f);
  CHECK(tf.poisson(0.0) == doctest::Approx(1.0 / (kPi * 20.0)));
  const double mass = quad::integrate_line(
      [&](double u) { return tf.poisson(u); }, 0.0, 20.0, 1e-10);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("transform_f: constant functions") {
  const FSpec f = FSpec::analytic_test(2.0, 0.0, 0.0, 5.0);
  const TransformedF tf(f);
  // F+ = F- = 2 and D*F = 2, so f = F+ + F- - D*F = 2
  for (double t : {-7.0, 0.0, 3.5})
    CHECK(tf(t) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("transform_f: sup bound and the Poisson-average identity") {
  for (const FSpec& f : {FSpec::fermi_dirac(kPi / 25.0, 0.3, 20.0),
                         FSpec::analytic_test(0.2, 0.7, 0.4, 2.0)}) {
    const TransformedF tf(f);
    const double bound = tf.sup_bound() + 1e-8;
    for (int i = 0; i <= 40; ++i) {
      const double t = -20.0 + i;
      CHECK(std::abs(tf(t)) <= bound);
    }
  }

  // scalar reduction of the representation, (D * f)(x) = F(x), by direct
  // quadrature (the Fermi-Dirac f decays to constants, so the substituted
  // integrand is tame)
  const FSpec fd = FSpec::fermi_dirac(kPi / 25.0, 0.3, 20.0);
  const TransformedF tf(fd);
  for (double x : {-3.0, 0.0, 1.7}) {
    const double conv =
        quad::integrate(
            [&](double theta) { return tf(x + fd.eta * std::tan(theta)); },
            -0.5 * kPi + 1e-9, 0.5 * kPi - 1e-9, 1e-9) /
        kPi;
    CHECK(conv == doctest::Approx(fd.eval_real(x)).epsilon(1e-7));
  }

  // cosine family: closed forms from the Poisson kernel Fourier pair force
  // f = offset + amp e^{eta freq} cos(freq t), whose Poisson average is F
  const FSpec at = FSpec::analytic_test(0.2, 0.7, 0.4, 2.0);
  const TransformedF tfa(at);
  for (double t : {-5.0, 0.0, 2.3}) {
    const double expect =
        0.2 + 0.7 * std::exp(2.0 * 0.4) * std::cos(0.4 * t);
    CHECK(tfa(t) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("F_of_H: fermi-dirac at the chemical potential") {
  HamiltonianSpec s = canon(0);
  s.lambda = 1.0;
  s.g = 0.0;
  s.f = FSpec::fermi_dirac(kPi / 25.0, 0.4, 20.0);
  Realization om;
  om.values = {0.4};  // 1x1 matrix pinned at mu_bar
  const AssembledOperator op = assemble(s, om, {0.0});
  CHECK(f_of_h_spectral(s.f, op)[0] == doctest::Approx(0.5));
}

TEST_CASE("F_of_H: constant F gives constant diagonal on both routes") {
  HamiltonianSpec s = canon(2);
  s.f = FSpec::analytic_test(0.8, 0.0, 0.0, 6.0);
  const Box box = s.box();
  const Realization om = sample(s.model, 17, box);
  const AssembledOperator op = assemble(s, om, zeros(box));
  for (double v : f_of_h_spectral(s.f, op))
    CHECK(v == doctest::Approx(0.8).epsilon(1e-12));
  for (double v : f_of_h_contour(s.f, op, 1e-8))
    CHECK(v == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("F_of_H: spectral and contour routes agree") {
  HamiltonianSpec s = canon(3);
  const Box box = s.box();
  const Realization om = sample(s.model, 23, box);
  const AssembledOperator op = assemble(s, om, zeros(box));
  const auto a = f_of_h_spectral(s.f, op);
  const auto b = f_of_h_contour(s.f, op, 1e-8);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-6));
}

TEST_CASE("phi_map: g=0 constant in V; kronecker kernel is the diagonal") {
  HamiltonianSpec s = canon(2);
  s.g = 0.0;
  const Box box = s.box();
  const Realization om = sample(s.model, 29, box);
  std::vector<double> v1(static_cast<std::size_t>(box.size()), 0.0);
  std::vector<double> v2(static_cast<std::size_t>(box.size()), 0.37);
  CHECK(phi_map(s, om, v1) == phi_map(s, om, v2));

  const AssembledOperator op = assemble(s, om, v1);
  const auto diag = f_of_h_spectral(s.f, op);
  const auto phi = phi_map(s, om, v1);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    CHECK(phi[i] == doctest::Approx(diag[i]).epsilon(1e-13));
    CHECK(phi[i] > 0.0);  // Fermi-Dirac spectral averages live in (0,1)
    CHECK(phi[i] < 1.0);
  }
}

TEST_CASE("solve_fixed_point: g=0 converges in exactly one iteration") {
  HamiltonianSpec s = canon(2);
  s.g = 0.0;
  const Realization om = sample(s.model, 31, s.box());
  const EffectivePotentialSolution sol = solve_fixed_point(s, om);
  CHECK(sol.iterations == 1);
  CHECK(sol.final_residual == 0.0);
}

TEST_CASE("solve_fixed_point: canonical contract") {
  const HamiltonianSpec s = canon(7);
  const Realization om = sample(s.model, 41, s.box());
  FixedPointOptions opt;
  opt.tol = 1e-12;
  const EffectivePotentialSolution sol = solve_fixed_point(s, om, opt);
  CHECK(sol.final_residual < 1e-12);
  CHECK(sol.iterations <= 60);
  CHECK_FALSE(sol.outside_proven_regime);

  const ValidityReport v = validity_check(s);
  CHECK(sol.contraction_estimate <= v.b_contraction);
  for (double x : sol.v_eff) CHECK(std::abs(x) <= v.v_inf_bound);
  for (std::size_t i = 0; i + 1 < sol.residuals.size(); ++i)
    CHECK(sol.residuals[i + 1] < sol.residuals[i]);

  SUBCASE("two starting points agree") {
    FixedPointOptions o2 = opt;
    rng::Stream st(55);
    o2.start.assign(sol.v_eff.size(), 0.0);
    for (double& x : o2.start) x = 2.0 * st.next_uniform() - 1.0;
    const EffectivePotentialSolution alt = solve_fixed_point(s, om, o2);
    for (std::size_t i = 0; i < sol.v_eff.size(); ++i)
      CHECK(std::abs(sol.v_eff[i] - alt.v_eff[i]) < 2e-12);
  }

  SUBCASE("doubling the tolerance barely moves the solution") {
    FixedPointOptions o2 = opt;
    o2.tol = 2e-12;
    const EffectivePotentialSolution alt = solve_fixed_point(s, om, o2);
    for (std::size_t i = 0; i < sol.v_eff.size(); ++i)
      CHECK(std::abs(sol.v_eff[i] - alt.v_eff[i]) < 1e-11);
  }
}

TEST_CASE("derivative_matrix: decoupled system at g=0") {
  HamiltonianSpec s = canon(2);
  s.g = 0.0;
  const Realization om = sample(s.model, 43, s.box());
  const EffectivePotentialSolution sol = solve_fixed_point(s, om);
  const Eigen::MatrixXd d = derivative_matrix(s, om, sol);
  const AssembledOperator op = assemble(s, om, sol.v_eff);
  const Eigen::MatrixXd expect = s.lambda *
                                 s.kernel.matrix(s.metric, s.box()) *
                                 response_matrix_spectral(s.f, op);
  CHECK((d - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("derivative_matrix: finite-difference oracle") {
  const HamiltonianSpec s = canon(3);
  FixedPointOptions opt;
  opt.tol = 1e-13;
  rng::Stream st(77);
  for (int rep = 0; rep < 4; ++rep) {
    const Realization om = sample(s.model, 200 + rep, s.box());
    const EffectivePotentialSolution sol = solve_fixed_point(s, om, opt);
    const Eigen::MatrixXd d = derivative_matrix(s, om, sol);
    const int l = static_cast<int>(st.next_uniform() * s.box().size());
    const double h = 1e-5;
    Realization p = om, m = om;
    p.values[static_cast<std::size_t>(l)] += h;
    m.values[static_cast<std::size_t>(l)] -= h;
    const auto vp = solve_fixed_point(s, p, opt).v_eff;
    const auto vm = solve_fixed_point(s, m, opt).v_eff;
    double max_err = 0.0, scale = 0.0;
    for (int n = 0; n < s.box().size(); ++n) {
      const double fd =
          (vp[static_cast<std::size_t>(n)] - vm[static_cast<std::size_t>(n)]) /
          (2.0 * h);
      max_err = std::max(max_err, std::abs(fd - d(n, l)));
      scale = std::max(scale, std::abs(fd));
    }
    CHECK(max_err < 1e-5 * scale);
  }
}

TEST_CASE("response matrix: spectral equals contour") {
  HamiltonianSpec s = canon(2);
  const Realization om = sample(s.model, 51, s.box());
  const AssembledOperator op = assemble(s, om, zeros(s.box()));
  const Eigen::MatrixXd a = response_matrix_spectral(s.f, op);
  const Eigen::MatrixXd b = response_matrix_contour(s.f, op, 1e-9);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("lemma 6: weighted derivative sums below C1") {
  const HamiltonianSpec s = canon(5);
  const ValidityReport v = validity_check(s);
  REQUIRE(v.lemma6_ok);
  const Box box = s.box();
  for (int rep = 0; rep < 5; ++rep) {
    const Realization om = sample(s.model, 300 + rep, box);
    const EffectivePotentialSolution sol = solve_fixed_point(s, om);
    const Eigen::MatrixXd d = derivative_matrix(s, om, sol);
    for (int l = 0; l < box.size(); ++l) {
      double acc = 0.0;
      for (int n = 0; n < box.size(); ++n)
        acc += std::exp(v.delta6 * s.metric(box.site(n), box.site(l))) *
               std::abs(d(n, l));
      CHECK(acc <= v.C1);
    }
  }
}

TEST_CASE("validity_check: canonical configuration") {
  const ValidityReport v = validity_check(canonical_spec());
  CHECK(v.nu == doctest::Approx(std::log(4.5)).epsilon(2e-3));
  CHECK(v.f_inf == doctest::Approx(1.0 / std::sin(0.8 * kPi)).epsilon(1e-12));
  CHECK(v.contraction_ok);
  CHECK(v.lemma6_ok);
  CHECK(v.lemma7_ok);
  CHECK(v.lemma8_ok);
  CHECK(v.lemma9_ok);
  CHECK(v.core_ok);
  CHECK(v.b2_lemma7 == doctest::Approx(1e-4 * v.C1));
  // the strict theta < eps2/2 gate does not close at these parameters; the
  // envelope statements themselves are tested on measured densities
  CHECK_FALSE(v.lemma10_ok);
  CHECK(v.m_inf_bound_tight ==
        doctest::Approx(0.5 * std::exp(v.vartheta)).epsilon(1e-12));
}

TEST_CASE("validity_check: g=0 passes everything with vanishing tilt") {
  HamiltonianSpec s = canonical_spec();
  s.g = 0.0;
  const ValidityReport v = validity_check(s);
  CHECK(v.core_ok);
  CHECK(v.vartheta == 0.0);
  CHECK(v.theta == 0.0);
  CHECK(v.m_inf_bound_tight == doctest::Approx(0.5));
}

TEST_CASE("validity_check: vartheta decreases to zero with g") {
  HamiltonianSpec s = canonical_spec();
  double prev = std::numeric_limits<double>::infinity();
  for (double g : {1e-2, 1e-3, 1e-4, 1e-5}) {
    s.g = g;
    const double t = validity_check(s).vartheta;
    CHECK(t < prev);
    prev = t;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("resample_map: no-op and g=0 closed forms") {
  const HamiltonianSpec s = canon(3);
  const Box box = s.box();
  const Realization om = sample(s.model, 61, box);
  const EffectivePotentialSolution base = solve_fixed_point(s, om);
  const std::vector<double> u = full_potential(s, om, base.v_eff);
  const int n0 = box.index_of(Site{0});

  SUBCASE("alpha = U(n0) returns omega") {
    const ResampleResult rr =
        resample_map(s, om, base, n0, u[static_cast<std::size_t>(n0)]);
    for (std::size_t i = 0; i < om.values.size(); ++i)
      CHECK(rr.omega_alpha.values[i] ==
            doctest::Approx(om.values[i]).epsilon(1e-10));
  }

  SUBCASE("g = 0 changes only the resampled site") {
    HamiltonianSpec s0 = s;
    s0.g = 0.0;
    const EffectivePotentialSolution b0 = solve_fixed_point(s0, om);
    const ResampleResult rr = resample_map(s0, om, b0, n0, 1.234);
    for (int i = 0; i < box.size(); ++i) {
      if (i == n0)
        CHECK(rr.omega_alpha[i] == doctest::Approx(1.234));
      else
        CHECK(rr.omega_alpha[i] == om[i]);
    }
  }
}

TEST_CASE("resample_map: lemma 7 bound and rank-one resolvent identity") {
  const HamiltonianSpec s = canon(4);
  const ValidityReport v = validity_check(s);
  REQUIRE(v.lemma7_ok);
  const Box box = s.box();
  rng::Stream st(91);
  for (int rep = 0; rep < 5; ++rep) {
    const Realization om = sample(s.model, 400 + rep, box);
    const EffectivePotentialSolution base = solve_fixed_point(s, om);
    const std::vector<double> u = full_potential(s, om, base.v_eff);
    const int n0 = static_cast<int>(st.next_uniform() * box.size());
    const double alpha =
        u[static_cast<std::size_t>(n0)] + 4.0 * (st.next_uniform() - 0.5);
    const ResampleResult rr = resample_map(s, om, base, n0, alpha);

    double lhs = 0.0;
    for (int n = 0; n < box.size(); ++n) {
      if (n == n0) continue;
      lhs += std::exp(v.delta6 * s.metric(box.site(n), box.site(n0))) *
             std::abs(rr.omega_alpha[n] - om[n]);
    }
    const double rhs = 2.0 * std::abs(s.g) * v.C1 / s.lambda *
                       (std::abs(alpha - u[static_cast<std::size_t>(n0)]) +
                        2.0 * std::abs(s.g) * v.v_inf_bound / s.lambda);
    CHECK(lhs <= rhs);

    // rank-one identity: H_alpha - H = lambda (alpha - U(n0)) P_{n0}
    const AssembledOperator op = assemble(s, om, base.v_eff);
    const AssembledOperator opa =
        assemble(s, rr.omega_alpha, rr.solution.v_eff);
    const Complex z(0.3, 0.2);
    const double du = std::abs(alpha - u[static_cast<std::size_t>(n0)]);
    for (int m = 0; m < box.size(); m += 3) {
      for (int k = 0; k < box.size(); k += 2) {
        const double lhs2 = std::abs(op.green(m, k, z) - opa.green(m, k, z));
        const double rhs2 = s.lambda * du * std::abs(op.green(m, n0, z)) *
                            std::abs(opa.green(n0, k, z));
        CHECK(lhs2 == doctest::Approx(rhs2).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("resolvent-difference kernel bound") {
  // |G(u,v;t+i eta) - G(u,v;t-i eta)| against the spectral-weight product
  const HamiltonianSpec s = canon(3);
  const Box box = s.box();
  const Realization om = sample(s.model, 71, box);
  const AssembledOperator op = assemble(s, om, zeros(box));
  const double eta = s.f.eta;
  const double nu = pick_nu(s.metric, s.dim, eta);
  const auto& e = op.eigenvalues();
  const auto& q = op.eigenvectors();
  auto weight = [&](int u, double t) {
    double acc = 0.0;
    for (int k = 0; k < op.size(); ++k) {
      const double d = e(k) - t;
      acc += q(u, k) * q(u, k) / (d * d + 0.5 * eta * eta);
    }
    return std::sqrt(acc);
  };
  for (double t : {-2.0, 0.0, 1.5}) {
    const Eigen::MatrixXcd g = op.green_matrix(Complex(t, eta));
    for (int u = 0; u < op.size(); ++u)
      for (int v = 0; v < op.size(); ++v) {
        const double lhs = 2.0 * std::abs(g(u, v).imag());
        const double rhs = 12.0 * eta *
                           std::exp(-nu * s.metric(box.site(u), box.site(v))) *
                           weight(u, t) * weight(v, t);
        CHECK(lhs <= rhs + 1e-12);
      }
  }
}

TEST_CASE("fixed point outside the proven regime warns or throws") {
  HamiltonianSpec s = canon(2);
  // outside the proven contraction bound but still empirically contracting
  s.g = 1.0;
  const Realization om = sample(s.model, 81, s.box());
  CHECK(validity_check(s).b_contraction > 1.0);
  CHECK_THROWS(solve_fixed_point(s, om));
  FixedPointOptions opt;
  opt.allow_outside_regime = true;
  opt.max_iterations = 500;
  const EffectivePotentialSolution sol = solve_fixed_point(s, om, opt);
  CHECK(sol.outside_proven_regime);
  CHECK(sol.final_residual < opt.tol);
}
