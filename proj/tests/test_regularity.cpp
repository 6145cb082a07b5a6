#include <doctest.h>

#include <cmath>
#include <limits>

#include "hflab/quadrature.hpp"
#include "hflab/regularity.hpp"
#include "hflab/rng.hpp"

using namespace hflab;

namespace {

HamiltonianSpec canon(int L) {
  HamiltonianSpec s = canonical_spec();
  s.half_width = L;
  return s;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1.0);
  return g;
}

}  // namespace

TEST_CASE("forward map: g=0 is the identity with unit Jacobian") {
  HamiltonianSpec s = canon(2);
  s.g = 0.0;
  const Realization om = sample(s.model, 7, s.box());
  const EffectivePotentialSolution sol = solve_fixed_point(s, om);
  const Eigen::MatrixXd d = derivative_matrix(s, om, sol);
  const ChangeOfVariables cov = forward_map(s, om, sol, d);
  CHECK(cov.det == doctest::Approx(1.0));
  for (int i = 0; i < s.box().size(); ++i)
    CHECK(cov.u[static_cast<std::size_t>(i)] == om[i]);
}

TEST_CASE("forward map: determinant sandwich and round trip") {
  const HamiltonianSpec s = canon(3);
  const Realization om = sample(s.model, 11, s.box());
  const EffectivePotentialSolution sol = solve_fixed_point(s, om);
  const Eigen::MatrixXd d = derivative_matrix(s, om, sol);
  const ChangeOfVariables cov = forward_map(s, om, sol, d);
  CHECK(cov.det > 0.0);

  // det(I + M) within [e^{-x}, e^{x}] for x = sum |M(m,n)|
  double x = 0.0;
  const double r = s.g / s.lambda;
  for (int i = 0; i < d.rows(); ++i)
    for (int j = 0; j < d.cols(); ++j) x += std::abs(r * d(i, j));
  CHECK(cov.det <= std::exp(x) + 1e-12);
  CHECK(cov.det >= std::exp(-x) - 1e-12);

  const std::vector<double> back = inverse_map(s, cov.u, 1e-11);
  for (std::size_t i = 0; i < back.size(); ++i)
    CHECK(std::abs(back[i] - om.values[i]) < 1e-9);
}

TEST_CASE("forward map: sub-volume block") {
  const HamiltonianSpec s = canon(2);
  const Realization om = sample(s.model, 13, s.box());
  const EffectivePotentialSolution sol = solve_fixed_point(s, om);
  const Eigen::MatrixXd d = derivative_matrix(s, om, sol);
  const std::vector<int> sub{0, 2, 3};
  const ChangeOfVariables cov = forward_map(s, om, sol, d, sub);
  CHECK(cov.jacobian.rows() == 3);
  CHECK(cov.det > 0.0);
}

TEST_CASE("conditional density: g=0 reproduces the disorder density") {
  HamiltonianSpec s = canon(3);
  s.g = 0.0;
  const Box box = s.box();
  const Realization om = sample(s.model, 17, box);
  const int n0 = box.index_of(Site{0});
  const auto grid = linspace(-8.0, 8.0, 81);
  const ConditionalDensityEstimate est = conditional_density(s, om, n0, grid);
  double max_err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    max_err =
        std::max(max_err, std::abs(est.rho[i] - s.model.density(grid[i])));
  CHECK(max_err < 1e-6);
  CHECK(est.normalization_residual < 1e-4);
}

TEST_CASE("conditional density: canonical g holds every bound") {
  const HamiltonianSpec s = canon(3);
  const ValidityReport v = validity_check(s);
  const Box box = s.box();
  const Realization om = sample(s.model, 19, box);
  const int n0 = box.index_of(Site{0});
  const auto grid = linspace(-10.0, 10.0, 101);
  const ConditionalDensityEstimate est = conditional_density(s, om, n0, grid);

  CHECK(est.normalization_residual < 1e-4);
  for (double r : est.rho) CHECK(r >= 0.0);

  // uniform bound e^vartheta sup rho/(smoothed rho) at the declared eps1
  for (double r : est.rho) CHECK(r <= v.m_inf_bound * (1.0 + 1e-6));

  // exponential envelope with eps = 3 eps2 / 2
  const double c_rho = s.model.c_rho();
  const double eps = 1.5 * s.model.eps2();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double av = std::abs(grid[i]);
    const double upper = std::exp(v.vartheta) * 0.5 * (c_rho - eps) *
                         std::exp((-c_rho + eps) * av);
    const double lower = std::exp(-v.vartheta) * 0.5 * (c_rho - eps) *
                         std::exp(-(c_rho + eps) * av);
    CHECK(est.rho[i] <= upper * (1.0 + 1e-9));
    CHECK(est.rho[i] >= lower * (1.0 - 1e-9));
  }

  // pointwise ratio bound via the Z-free log numerators
  rng::Stream st(23);
  for (int k = 0; k < 300; ++k) {
    const std::size_t i =
        static_cast<std::size_t>(st.next_uniform() * grid.size());
    const std::size_t j =
        static_cast<std::size_t>(st.next_uniform() * grid.size());
    if (i == j || i >= grid.size() || j >= grid.size()) continue;
    const double lr = est.log_numerator[i] - est.log_numerator[j];
    const double dv = std::abs(grid[i] - grid[j]);
    const double c1 = s.model.c1();
    CHECK(lr <= c1 * (1.0 + v.vartheta) * dv + 1e-9);
    CHECK(lr >= -c1 * (1.0 + v.vartheta) * dv - 1e-9);
  }
}

TEST_CASE("conditional density: jacobian and product sandwiches") {
  const HamiltonianSpec s = canon(3);
  const ValidityReport v = validity_check(s);
  const Box box = s.box();
  rng::Stream st(29);
  for (int rep = 0; rep < 3; ++rep) {
    const Realization om = sample(s.model, 500 + rep, box);
    const EffectivePotentialSolution base = solve_fixed_point(s, om);
    const std::vector<double> u = full_potential(s, om, base.v_eff);
    const int n0 = static_cast<int>(st.next_uniform() * box.size());
    const double alpha =
        u[static_cast<std::size_t>(n0)] + 3.0 * (st.next_uniform() - 0.5);
    const double du = std::abs(alpha - u[static_cast<std::size_t>(n0)]);

    const ResampleResult rr = resample_map(s, om, base, n0, alpha);
    const Eigen::MatrixXd d_base = derivative_matrix(s, om, base);
    const Eigen::MatrixXd d_alpha =
        derivative_matrix(s, rr.omega_alpha, rr.solution);
    const ChangeOfVariables cov_base = forward_map(s, om, base, d_base);
    const ChangeOfVariables cov_alpha =
        forward_map(s, rr.omega_alpha, rr.solution, d_alpha);

    // J_{U_alpha}/J_U = det(DT_omega)/det(DT_omega_alpha)
    const double ratio = cov_base.det / cov_alpha.det;
    const double bound = std::exp(v.jacobian_bound * du);
    CHECK(ratio <= bound * (1.0 + 1e-12));
    CHECK(ratio >= 1.0 / bound * (1.0 - 1e-12));

    // product of density ratios, lemma-7 controlled
    double log_prod = 0.0;
    for (int n = 0; n < box.size(); ++n) {
      if (n == n0) continue;
      log_prod += s.model.log_density(rr.omega_alpha[n]) -
                  s.model.log_density(om[n]);
    }
    const double exponent =
        2.0 * std::abs(s.g) / s.lambda * s.model.c1() * v.C1 *
        (du + 2.0 * std::abs(s.g) * v.v_inf_bound / s.lambda);
    CHECK(log_prod <= exponent + 1e-12);
    CHECK(log_prod >= -exponent - 1e-12);

    // lemma 8: weighted cancellation of derivative matrices
    const double delta = v.delta8;
    for (int l = 0; l < box.size(); ++l) {
      double acc = 0.0;
      for (int n = 0; n < box.size(); ++n)
        acc += std::exp(0.5 * delta * s.metric(box.site(n), box.site(l))) *
               std::abs(d_base(n, l) - d_alpha(n, l));
      const double rhs =
          v.C2 * du *
          std::exp(-0.5 * delta * s.metric(box.site(n0), box.site(l)));
      CHECK(std::abs(s.g) / s.lambda * acc <= rhs + 1e-15);
    }
  }
}

TEST_CASE("conditional density: g -> 0 continuity") {
  HamiltonianSpec s = canon(2);
  const Box box = s.box();
  const Realization om = sample(s.model, 37, box);
  const int n0 = box.index_of(Site{0});
  const auto grid = linspace(-4.0, 4.0, 33);
  double prev = std::numeric_limits<double>::infinity();
  for (double g : {1e-2, 1e-3, 1e-4}) {
    s.g = g;
    const ConditionalDensityEstimate est = conditional_density(s, om, n0, grid);
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      sup = std::max(sup, std::abs(est.rho[i] - s.model.density(grid[i])));
    CHECK(sup < prev);
    prev = sup;
  }
  CHECK(prev < 1e-5);
}

TEST_CASE("M-infinity estimate: empirical below analytic") {
  const HamiltonianSpec s = canon(2);
  const Box box = s.box();
  const MInfinityEstimate est = estimate_m_infinity(
      s, 3, {box.index_of(Site{0}), box.index_of(Site{1})},
      linspace(-6.0, 6.0, 25), 1234);
  CHECK(est.empirical_max > 0.0);
  CHECK(est.empirical_max <= est.analytic_bound);
  CHECK(est.analytic_bound_tight <= est.analytic_bound * (1.0 + 1e-12));
  CHECK(est.empirical_max <= est.analytic_bound_tight * (1.0 + 1e-9));
}

TEST_CASE("M-infinity: g=0 anchor equals the density sup") {
  HamiltonianSpec s = canon(1);
  s.g = 0.0;
  const MInfinityEstimate est = estimate_m_infinity(
      s, 1, {s.box().index_of(Site{0})}, linspace(-3.0, 3.0, 25), 5);
  CHECK(est.analytic_bound_tight == doctest::Approx(0.5));
  CHECK(est.empirical_max <= 0.5 * (1.0 + 1e-9));
}

TEST_CASE("decoupling table: degenerate and closed-form points") {
  const DisorderModel m = DisorderModel::two_sided_exponential(1.0);
  DecouplingOptions opt;
  opt.window = 30.0;
  auto rho = [&](double v) { return m.density(v); };

  const DecouplingTable tab = estimate_d_s1(rho, {0.0, 0.5}, opt);
  CHECK(tab.d_s1[0] == doctest::Approx(1.0));

  // brute-force double-quadrature oracle at a non-singular z for s = 1/2
  auto psi_phi = [&](double x, double y, bool with_v) {
    return quad::integrate_line(
        [&](double v) {
          double q = rho(v) / std::pow(std::hypot(v - x, y), 0.5);
          if (with_v) q *= std::sqrt(std::abs(v));
          return q;
        },
        0.0, 3.0, 1e-9);
  };
  const double oracle = psi_phi(0.9, 0.5, true) / psi_phi(0.9, 0.5, false);
  CHECK(oracle < tab.d_s1[1] * (1.0 + 1e-6));

  // the |z| -> infinity limit is the s-th absolute moment Gamma(3/2)
  const double half_moment = 0.5 * std::sqrt(3.14159265358979323846);
  CHECK(half_moment < tab.d_s1[1] * (1.0 + 1e-9));
  CHECK(tab.d_s1[1] < 5.0);
}

TEST_CASE("decoupling table: independent scan oracle at s = 1/2") {
  const DisorderModel m = DisorderModel::two_sided_exponential(1.0);
  DecouplingOptions opt;
  opt.window = 30.0;
  const DecouplingTable tab =
      estimate_d_s1([&](double v) { return m.density(v); }, {0.5}, opt);
  double manual = 0.0;
  for (double x : {0.0, 0.5, 1.0, 2.0, 5.0, 20.0, 1000.0}) {
    const double num = quad::integrate_line(
        [&](double v) {
          return m.density(v) * std::sqrt(std::abs(v)) /
                 std::pow(std::hypot(v - x, 1e-2), 0.5);
        },
        0.0, 3.0, 1e-9);
    const double den = quad::integrate_line(
        [&](double v) {
          return m.density(v) / std::pow(std::hypot(v - x, 1e-2), 0.5);
        },
        0.0, 3.0, 1e-9);
    manual = std::max(manual, num / den);
  }
  CHECK(tab.d_s1[0] >= manual * (1.0 - 1e-6));
}

TEST_CASE("tau regularity of the exponential density") {
  const DisorderModel m = DisorderModel::two_sided_exponential(1.0);
  const auto grid = linspace(-12.0, 12.0, 481);
  std::vector<double> rho(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) rho[i] = m.density(grid[i]);

  const TauRegularityReport rep = tau_regularity_check(grid, rho, 1.0, 0.0);
  CHECK(rep.ratio_ok);
  CHECK(rep.window_ok);
  CHECK(rep.window_constant == doctest::Approx(std::exp(2.0)));
  for (const auto& [q, c] : rep.q_decay) {
    CHECK(c > 0.0);
    CHECK(c < 50.0);
  }
}
