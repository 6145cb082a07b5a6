#include "hflab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hflab/quadrature.hpp"
#include "hflab/rng.hpp"

namespace hflab {

ChangeOfVariables forward_map(const HamiltonianSpec& spec,
                              const Realization& omega,
                              const EffectivePotentialSolution& sol,
                              const Eigen::MatrixXd& derivative,
                              const std::vector<int>& sites) {
  const Box box = spec.box();
  ChangeOfVariables cov;
  cov.sites = sites;
  if (cov.sites.empty()) {
    cov.sites.resize(static_cast<std::size_t>(box.size()));
    for (int i = 0; i < box.size(); ++i)
      cov.sites[static_cast<std::size_t>(i)] = i;
  }
  const std::vector<double> u_full = full_potential(spec, omega, sol.v_eff);
  const int n = static_cast<int>(cov.sites.size());
  cov.u.resize(static_cast<std::size_t>(n));
  cov.jacobian.resize(n, n);
  const double r = spec.g / spec.lambda;
  for (int a = 0; a < n; ++a) {
    const int i = cov.sites[static_cast<std::size_t>(a)];
    cov.u[static_cast<std::size_t>(a)] = u_full[static_cast<std::size_t>(i)];
    for (int b = 0; b < n; ++b) {
      const int j = cov.sites[static_cast<std::size_t>(b)];
      cov.jacobian(a, b) = (a == b ? 1.0 : 0.0) + r * derivative(i, j);
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(cov.jacobian);
  cov.det = lu.determinant();
  if (!(cov.det > 0))
    throw std::runtime_error("forward_map: Jacobian determinant not positive");
  cov.log_det = std::log(cov.det);
  return cov;
}

std::vector<double> inverse_map(const HamiltonianSpec& spec,
                                const std::vector<double>& u, double tol) {
  const Box box = spec.box();
  Realization om;
  om.values = u;  // initial guess omega = U
  om.seed = 0;
  FixedPointOptions opt;
  opt.tol = 0.1 * tol;
  opt.allow_outside_regime = true;
  for (int outer = 0; outer < 300; ++outer) {
    const EffectivePotentialSolution sol = solve_fixed_point(spec, om, opt);
    opt.start = sol.v_eff;
    double delta = 0.0;
    for (int i = 0; i < box.size(); ++i) {
      const double next =
          u[static_cast<std::size_t>(i)] -
          spec.g / spec.lambda * sol.v_eff[static_cast<std::size_t>(i)];
      delta = std::max(delta,
                       std::abs(next - om.values[static_cast<std::size_t>(i)]));
      om.values[static_cast<std::size_t>(i)] = next;
    }
    if (delta < tol) return om.values;
  }
  throw std::runtime_error("inverse_map: no convergence");
}

namespace {

// log [ prod_n rho(omega_alpha(n)) * J_{U_alpha} ] for the resample at
// U(n0) = v; the conditioned values are those of the base realization.
double log_numerator_impl(const HamiltonianSpec& spec,
                          const Realization& omega,
                          const EffectivePotentialSolution& base, int n0,
                          double v) {
  const ResampleResult rr = resample_map(spec, omega, base, n0, v, 1e-11);
  double acc = 0.0;
  for (double w : rr.omega_alpha.values) acc += spec.model.log_density(w);
  if (spec.g != 0.0) {
    const Eigen::MatrixXd d =
        derivative_matrix(spec, rr.omega_alpha, rr.solution);
    const Eigen::MatrixXd dt =
        Eigen::MatrixXd::Identity(d.rows(), d.cols()) +
        (spec.g / spec.lambda) * d;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(dt);
    const double det = lu.determinant();
    if (!(det > 0))
      throw std::runtime_error("conditional_density: nonpositive Jacobian");
    acc -= std::log(det);  // J_U = 1/det(DT)
  }
  return acc;
}

}  // namespace

double conditional_log_numerator(const HamiltonianSpec& spec,
                                 const Realization& omega,
                                 const EffectivePotentialSolution& base,
                                 int n0_box_index, double v) {
  return log_numerator_impl(spec, omega, base, n0_box_index, v);
}

ConditionalDensityEstimate conditional_density(
    const HamiltonianSpec& spec, const Realization& omega, int n0_box_index,
    const std::vector<double>& v_grid, const ConditionalDensityOptions& opt) {
  FixedPointOptions fopt;
  fopt.tol = 1e-13;
  fopt.allow_outside_regime = true;
  const EffectivePotentialSolution base = solve_fixed_point(spec, omega, fopt);

  ConditionalDensityEstimate est;
  est.n0 = n0_box_index;
  est.v_grid = v_grid;

  // alpha window (reported): the n0 density factor is centered near zero,
  // shifted by at most |U(n0)| plus the (g/lambda) V_eff excursion
  const std::vector<double> u = full_potential(spec, omega, base.v_eff);
  const double shift =
      std::abs(u[static_cast<std::size_t>(n0_box_index)]) +
      std::abs(spec.g / spec.lambda) * 100.0 + 1.0;
  est.alpha_hi = spec.model.tail_radius(opt.tail_mass) + shift;
  est.alpha_lo = -est.alpha_hi;

  auto num = [&](double a) {
    return std::exp(log_numerator_impl(spec, omega, base, n0_box_index, a));
  };
  // The normalization uses the tan substitution so heavy-tailed models keep
  // their tail mass; tolerance is scaled by the peak magnitude since the
  // density products can sit far below 1.
  const double peak = std::max({num(0.0), num(u[static_cast<std::size_t>(n0_box_index)]),
                                std::numeric_limits<double>::min()});
  const double z =
      quad::integrate_line(num, 0.0, 2.0 + 0.5 * shift, opt.quad_tol * peak);
  if (!(z > 0))
    throw std::runtime_error("conditional_density: vanishing normalization");
  est.log_z = std::log(z);

  est.rho.resize(v_grid.size());
  est.log_numerator.resize(v_grid.size());
  for (std::size_t i = 0; i < v_grid.size(); ++i) {
    est.log_numerator[i] =
        log_numerator_impl(spec, omega, base, n0_box_index, v_grid[i]);
    est.rho[i] = std::exp(est.log_numerator[i] - est.log_z);
  }

  // normalization residual over the reported grid range
  if (v_grid.size() >= 2) {
    const double lo = v_grid.front(), hi = v_grid.back();
    const double mid = std::clamp(0.0, lo, hi);
    double m = 0.0;
    m += quad::integrate(num, lo, mid, opt.quad_tol * peak);
    m += quad::integrate(num, mid, hi, opt.quad_tol * peak);
    est.normalization_residual = std::abs(m / z - 1.0);
  }
  return est;
}

MInfinityEstimate estimate_m_infinity(const HamiltonianSpec& spec,
                                      int realizations,
                                      const std::vector<int>& n0_list,
                                      const std::vector<double>& v_grid,
                                      std::uint64_t seed) {
  MInfinityEstimate out;
  const Box box = spec.box();
  for (int r = 0; r < realizations; ++r) {
    const Realization om = sample(spec.model, rng::mix(seed, r), box);
    for (int n0 : n0_list) {
      const ConditionalDensityEstimate est =
          conditional_density(spec, om, n0, v_grid);
      for (double x : est.rho) out.empirical_max = std::max(out.empirical_max, x);
    }
  }
  const ValidityReport v = validity_check(spec);
  out.analytic_bound = v.m_inf_bound;
  out.analytic_bound_tight = v.m_inf_bound_tight;
  return out;
}

DecouplingTable estimate_d_s1(const std::function<double(double)>& rho,
                              const std::vector<double>& s_grid,
                              const DecouplingOptions& opt) {
  // The window must dominate the envelope tail: everything past it
  // contributes at most tail_prefactor e^{-tail_rate W} per unit weight,
  // which the caller keeps below quad_tol by construction.
  // z grid: log-spaced real parts of both signs plus zero, with a few
  // imaginary offsets; psi/phi depend on z through |v - z| only
  std::vector<double> re{0.0};
  for (double m = 1e-3; m <= 1.001e3; m *= std::pow(10.0, 1.0 / opt.z_points_per_decade)) {
    re.push_back(m);
    re.push_back(-m);
  }
  const std::vector<double> im{0.0, 1e-2, 1.0};

  auto weighted = [&](double s, double x, double y, bool with_v) {
    auto g = [&](double v) {
      const double av = std::abs(v);
      double q = rho(v);
      if (with_v) q *= std::pow(av, s);
      if (y != 0.0) q /= std::pow(std::hypot(v - x, y), s);
      return q;
    };
    const double W = opt.window;
    double total = 0.0;
    if (y != 0.0) {
      total += quad::integrate(g, -W, 0.0, opt.quad_tol);
      total += quad::integrate(g, 0.0, W, opt.quad_tol);
    } else {
      auto base = [&](double v) {
        double q = rho(v);
        if (with_v) q *= std::pow(std::abs(v), s);
        return q;
      };
      // integrable power singularity at v = x
      if (x <= -W || x >= W) {
        total += quad::integrate(
            [&](double v) { return base(v) * std::pow(std::abs(v - x), -s); },
            -W, 0.0, opt.quad_tol);
        total += quad::integrate(
            [&](double v) { return base(v) * std::pow(std::abs(v - x), -s); },
            0.0, W, opt.quad_tol);
      } else {
        const double lo = std::min(0.0, x), hi = std::max(0.0, x);
        total += quad::integrate_power_singularity(base, -W, lo, x, s,
                                                   opt.quad_tol);
        if (lo != hi)
          total +=
              quad::integrate_power_singularity(base, lo, hi, x, s, opt.quad_tol);
        total += quad::integrate_power_singularity(base, hi, W, x, s,
                                                   opt.quad_tol);
      }
    }
    return total;
  };

  DecouplingTable tab;
  tab.s = s_grid;
  for (double s : s_grid) {
    double best = 0.0, best_re = 0.0;
    if (s == 0.0) {
      tab.d_s1.push_back(1.0);  // psi_0 = phi_0 = total mass
      tab.argmax_re_z.push_back(0.0);
      continue;
    }
    for (double x : re)
      for (double y : im) {
        const double psi = weighted(s, x, y, true);
        const double phi = weighted(s, x, y, false);
        if (phi > 0 && psi / phi > best) {
          best = psi / phi;
          best_re = x;
        }
      }
    tab.d_s1.push_back(best);
    tab.argmax_re_z.push_back(best_re);
  }
  return tab;
}

TauRegularityReport tau_regularity_check(const std::vector<double>& v_grid,
                                         const std::vector<double>& rho,
                                         double c1, double vartheta,
                                         std::uint64_t seed) {
  if (v_grid.size() != rho.size() || v_grid.size() < 8)
    throw std::invalid_argument("tau_regularity_check: bad grid");
  TauRegularityReport rep;
  rep.window_constant = std::exp(2.0 * c1 * (1.0 + vartheta));

  const double lo = v_grid.front(), hi = v_grid.back();
  auto interp = [&](double v) {
    if (v <= lo) return rho.front();
    if (v >= hi) return rho.back();
    const double t = (v - lo) / (v_grid[1] - v_grid[0]);
    const std::size_t i =
        std::min(static_cast<std::size_t>(t), v_grid.size() - 2);
    const double frac = t - static_cast<double>(i);
    return rho[i] * (1.0 - frac) + rho[i + 1] * frac;
  };
  auto mass = [&](double a, double b) {
    a = std::max(a, lo);
    b = std::min(b, hi);
    if (a >= b) return 0.0;
    return quad::integrate(interp, a, b, 1e-10);
  };

  rng::Stream st(seed);
  // window inequality on sampled (u, delta)
  for (int k = 0; k < 200; ++k) {
    const double u = lo + 1.0 + (hi - lo - 2.0) * st.next_uniform();
    const double delta = 0.05 + 0.95 * st.next_uniform();
    const double lhs = mass(u - delta, u + delta);
    const double rhs = delta * rep.window_constant * mass(u - 1.0, u + 1.0);
    if (lhs > rhs * (1.0 + 1e-9)) ++rep.window_violations;
  }
  rep.window_ok = rep.window_violations == 0;

  // pointwise ratio bound on sampled grid pairs
  for (int k = 0; k < 2000; ++k) {
    const std::size_t i =
        static_cast<std::size_t>(st.next_uniform() * static_cast<double>(v_grid.size()));
    const std::size_t j =
        static_cast<std::size_t>(st.next_uniform() * static_cast<double>(v_grid.size()));
    if (i == j || i >= rho.size() || j >= rho.size()) continue;
    if (!(rho[i] > 0.0 && rho[j] > 0.0)) continue;
    const double dv = std::abs(v_grid[i] - v_grid[j]);
    const double lr = std::log(rho[i] / rho[j]);
    if (lr > c1 * (1.0 + vartheta) * dv + 1e-9 ||
        lr < -c1 * (1.0 - vartheta) * dv - 1e-9)
      ++rep.ratio_violations;
  }
  rep.ratio_ok = rep.ratio_violations == 0;

  // fitted regular-q-decay constants C_q = sup_u (1 + |u|^q) rho([u-1, u+1])
  for (double q : {1.0, 2.0, 4.0}) {
    double c = 0.0;
    for (double u = lo + 1.0; u <= hi - 1.0; u += 0.25)
      c = std::max(c, (1.0 + std::pow(std::abs(u), q)) * mass(u - 1.0, u + 1.0));
    rep.q_decay.emplace_back(q, c);
  }
  return rep;
}

}  // namespace hflab
