#include "hflab/effpot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hflab/quadrature.hpp"

namespace hflab {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2 = 1.41421356237309504880;
}

// ----------------------------------------------------------- TransformedF ----

TransformedF::TransformedF(const FSpec& f, double tol) : f_(f), tol_(tol) {}

double TransformedF::poisson(double u) const {
  const double eta = f_.eta;
  return eta / (kPi * (eta * eta + u * u));
}

double TransformedF::poisson_smooth(double t) const {
  const double eta = f_.eta;
  if (f_.kind == FSpec::Kind::analytic_test) {
    // Poisson kernel Fourier pair: (D * cos(a .))(t) = e^{-eta a} cos(a t)
    return f_.offset +
           f_.amp * std::exp(-eta * std::abs(f_.freq)) * std::cos(f_.freq * t);
  }
  // (D*F)(t) = (1/pi) int_{-pi/2}^{pi/2} F(t + eta tan theta) dtheta; the
  // Fermi-Dirac integrand is a smooth monotone step in theta
  const double half_pi = 0.5 * kPi;
  auto g = [&](double theta) {
    return f_.eval_real(t + eta * std::tan(theta));
  };
  const double eps = 1e-9;
  return quad::integrate(g, -half_pi + eps, half_pi - eps,
                         tol_ * (1.0 + f_.sup_on_strip())) /
         kPi;
}

double TransformedF::operator()(double t) const {
  auto it = cache_.find(t);
  if (it != cache_.end()) return it->second;
  // F real on R, so F(t - i eta) = conj(F(t + i eta))
  const double two_re = 2.0 * f_.eval(std::complex<double>(t, f_.eta)).real();
  const double v = two_re - poisson_smooth(t);
  if (cache_.size() < 200000) cache_.emplace(t, v);
  return v;
}

double TransformedF::sup_bound() const { return 3.0 * f_.sup_on_strip(); }

// --------------------------------------------------------------- F_of_H ----

std::vector<double> f_of_h_spectral(const FSpec& f,
                                    const AssembledOperator& op) {
  const auto& E = op.eigenvalues();
  const auto& Q = op.eigenvectors();
  const int n = op.size();
  std::vector<double> fe(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    fe[static_cast<std::size_t>(k)] = f.eval_real(E(k));
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int m = 0; m < n; ++m) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k)
      acc += fe[static_cast<std::size_t>(k)] * Q(m, k) * Q(m, k);
    out[static_cast<std::size_t>(m)] = acc;
  }
  return out;
}

std::vector<double> f_of_h_contour(const FSpec& f, const AssembledOperator& op,
                                   double tol) {
  TransformedF tf(f, 0.1 * tol);
  const auto& E = op.eigenvalues();
  const auto& Q = op.eigenvectors();
  const int n = op.size();
  const double eta = f.eta;
  const double center = 0.5 * (E(0) + E(n - 1));
  const double scale = std::max(eta, E(n - 1) - E(0) + eta);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    auto integrand = [&](double t) {
      // Im G(m,m; t + i eta) = sum_k Q(m,k)^2 eta / ((E_k - t)^2 + eta^2)
      double im = 0.0;
      for (int k = 0; k < n; ++k) {
        const double d = E(k) - t;
        im += Q(m, k) * Q(m, k) * eta / (d * d + eta * eta);
      }
      return im * tf(t);
    };
    out[static_cast<std::size_t>(m)] =
        quad::integrate_line(integrand, center, scale, tol) / kPi;
  }
  return out;
}

// -------------------------------------------------------------- phi_map ----

std::vector<double> phi_map(const HamiltonianSpec& spec,
                            const Realization& omega,
                            const std::vector<double>& v) {
  const Box box = spec.box();
  AssembledOperator op = assemble(spec, omega, v);
  const std::vector<double> diag = f_of_h_spectral(spec.f, op);
  const Eigen::MatrixXd a = spec.kernel.matrix(spec.metric, box);
  const int n = box.size();
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int m = 0; m < n; ++m) acc += a(i, m) * diag[static_cast<std::size_t>(m)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

// ------------------------------------------------------- solve_fixed_point ----

EffectivePotentialSolution solve_fixed_point(const HamiltonianSpec& spec,
                                             const Realization& omega,
                                             const FixedPointOptions& opt) {
  spec.validate();
  const Box box = spec.box();
  if (static_cast<int>(omega.values.size()) != box.size())
    throw std::invalid_argument("solve_fixed_point: realization/box mismatch");

  EffectivePotentialSolution sol;

  // proven-contraction precheck (Lipschitz bound for Phi)
  {
    const double nu = pick_nu(spec.metric, spec.dim, spec.f.eta);
    double b = std::numeric_limits<double>::infinity();
    if (nu > 0) {
      try {
        const double s_nu = exp_sum(spec.metric, spec.dim, -nu).value;
        const double s_ga = exp_sum(spec.metric, spec.dim, -spec.kernel.gamma_a).value;
        b = std::abs(spec.g) * (72.0 * kSqrt2 / spec.f.eta) * s_nu * s_ga *
            spec.kernel.C_a * spec.f.sup_on_strip();
      } catch (const std::domain_error&) {
      }
    }
    if (!(b < 1.0)) {
      sol.outside_proven_regime = true;
      if (!opt.allow_outside_regime)
        throw std::runtime_error(
            "solve_fixed_point: contraction hypothesis fails; set "
            "allow_outside_regime to explore");
    }
  }

  std::vector<double> v = opt.start;
  if (v.empty()) v.assign(static_cast<std::size_t>(box.size()), 0.0);

  double prev_res = std::numeric_limits<double>::infinity();
  for (int k = 0; k < opt.max_iterations; ++k) {
    const std::vector<double> w = phi_map(spec, omega, v);
    double res = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      res = std::max(res, std::abs(w[i] - v[i]));
    if (res < opt.tol) {
      sol.final_residual = res;
      sol.v_eff = v;
      // median ratio of consecutive residuals as the empirical rate
      std::vector<double> ratios;
      for (std::size_t i = 0; i + 1 < sol.residuals.size(); ++i)
        if (sol.residuals[i] > 0)
          ratios.push_back(sol.residuals[i + 1] / sol.residuals[i]);
      if (!ratios.empty()) {
        std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2,
                         ratios.end());
        sol.contraction_estimate = ratios[ratios.size() / 2];
      }
      return sol;
    }
    // floating-point stall: residual at rounding level and no longer shrinking
    if (res < 1e-11 && res >= 0.5 * prev_res && k >= 3) {
      sol.final_residual = res;
      sol.v_eff = v;
      return sol;
    }
    v = w;
    ++sol.iterations;
    sol.residuals.push_back(res);
    prev_res = res;
  }
  throw std::runtime_error("solve_fixed_point: no convergence after max iterations");
}

// ------------------------------------------------------ response matrices ----

Eigen::MatrixXd response_matrix_spectral(const FSpec& f,
                                         const AssembledOperator& op) {
  const auto& E = op.eigenvalues();
  const auto& Q = op.eigenvectors();
  const int n = op.size();
  const double scale = 1.0 + E.cwiseAbs().maxCoeff();
  Eigen::MatrixXd fdd(n, n);
  for (int p = 0; p < n; ++p) {
    for (int q = p; q < n; ++q) {
      const double de = E(p) - E(q);
      double v;
      if (std::abs(de) < 1e-7 * scale)
        v = f.deriv_real(0.5 * (E(p) + E(q)));
      else
        v = (f.eval_real(E(p)) - f.eval_real(E(q))) / de;
      fdd(p, q) = fdd(q, p) = v;
    }
  }
  Eigen::MatrixXd m(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      const Eigen::RowVectorXd w = Q.row(a).cwiseProduct(Q.row(b));
      m(a, b) = m(b, a) = w * fdd * w.transpose();
    }
  }
  return m;
}

Eigen::MatrixXd response_matrix_contour(const FSpec& f,
                                        const AssembledOperator& op,
                                        double tol) {
  TransformedF tf(f, 0.1 * tol);
  const auto& E = op.eigenvalues();
  const auto& Q = op.eigenvectors();
  const int n = op.size();
  const double eta = f.eta;
  const double center = 0.5 * (E(0) + E(n - 1));
  const double scale = std::max(eta, E(n - 1) - E(0) + eta);
  Eigen::MatrixXd m(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      auto integrand = [&](double t) {
        Complex g(0.0, 0.0);
        for (int k = 0; k < n; ++k)
          g += Q(a, k) * Q(b, k) / Complex(E(k) - t, -eta);
        return (g * g).imag() * tf(t);
      };
      // d(H - z)^{-1} = -G P G brings the leading minus
      m(a, b) = m(b, a) =
          -quad::integrate_line(integrand, center, scale, tol) / kPi;
    }
  }
  return m;
}

Eigen::MatrixXd derivative_matrix(const HamiltonianSpec& spec,
                                  const Realization& omega,
                                  const EffectivePotentialSolution& sol) {
  const Box box = spec.box();
  AssembledOperator op = assemble(spec, omega, sol.v_eff);
  const Eigen::MatrixXd m = response_matrix_spectral(spec.f, op);
  const Eigen::MatrixXd a = spec.kernel.matrix(spec.metric, box);
  const Eigen::MatrixXd am = a * m;
  const int n = box.size();
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n) - spec.g * am;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
  const Eigen::MatrixXd d = lu.solve(spec.lambda * am);
  const double resid = (lhs * d - spec.lambda * am).cwiseAbs().maxCoeff();
  if (!(resid < 1e-8 * (1.0 + std::abs(spec.lambda))))
    throw std::runtime_error("derivative_matrix: near-singular system");
  return d;
}

// -------------------------------------------------------- validity_check ----

namespace {

double safe_exp_sum(const Metric& metric, int dim, double beta,
                    std::map<std::string, double>& ledger,
                    const std::string& name) {
  double v;
  try {
    v = exp_sum(metric, dim, beta).value;
  } catch (const std::exception&) {
    v = std::numeric_limits<double>::infinity();
  }
  ledger[name] = v;
  return v;
}

}  // namespace

ValidityReport validity_check(const HamiltonianSpec& spec) {
  spec.validate();
  ValidityReport r;
  r.eta = spec.f.eta;
  r.f_inf = spec.f.sup_on_strip();
  r.nu = pick_nu(spec.metric, spec.dim, spec.f.eta);
  const double ga = spec.kernel.gamma_a;
  const double g = std::abs(spec.g);
  const double lam = std::abs(spec.lambda);
  const double c1 = spec.model.c1();
  const double base = spec.kernel.C_a * 72.0 * kSqrt2 * r.f_inf / r.eta;

  auto S = [&](double beta, const std::string& name) {
    return safe_exp_sum(spec.metric, spec.dim, beta, r.s_values, name);
  };

  if (r.nu <= 0) return r;  // no admissible Combes-Thomas rate: all checks fail

  r.delta6 = 0.9 * std::min(ga, 2.0 * r.nu);
  const double s6a = S(r.delta6 - ga, "S_delta6_minus_gamma");
  const double s6b = S(r.delta6 - 2.0 * r.nu, "S_delta6_minus_2nu");
  r.b2_lemma6 = base * g * s6a * s6b;
  r.C1 = lam * 2.0 * base * s6a * s6b;
  r.b2_lemma7 = g / lam * r.C1;

  r.delta0 = std::min(r.nu, ga);
  const double s_d0h = S(-0.5 * r.delta0, "S_minus_delta0_half");
  // largest delta8 on a grid keeping the lemma-8 smallness below 0.45
  r.delta8 = 0.02 * r.delta0;
  for (int i = 49; i >= 1; --i) {
    const double cand = 0.02 * i * r.delta0;
    double s = std::numeric_limits<double>::infinity();
    try {
      s = exp_sum(spec.metric, spec.dim, 0.5 * (cand - r.delta0)).value;
    } catch (const std::exception&) {
    }
    if (base * g * s * s_d0h <= 0.45) {
      r.delta8 = cand;
      break;
    }
  }
  const double s8a = S(0.5 * (r.delta8 - r.delta0), "S_delta8_minus_delta0_half");
  const double s_nu = S(-r.nu, "S_minus_nu");
  r.b2_lemma8 = base * g * s8a * s_d0h;
  r.C2 = (48.0 * r.f_inf * spec.kernel.C_a / (r.eta * r.eta)) * s8a * s_nu *
         (lam * g + g * g * r.C1);

  r.delta9 = 0.9 * r.delta0;
  const double s9a = S(r.delta9 - ga, "S_delta9_minus_gamma");
  const double s9b = S(r.delta9 - r.nu, "S_delta9_minus_nu");
  r.b2_lemma9 = base * g * s9a * s9b;

  const double s_ga = S(-ga, "S_minus_gamma");
  r.b_contraction = g * (72.0 * kSqrt2 / r.eta) * s_nu * s_ga *
                    spec.kernel.C_a * r.f_inf;
  r.v_inf_bound = spec.kernel.C_a * s_ga * 18.0 * kSqrt2 * r.f_inf;
  r.vartheta =
      (2.0 * c1 * g / lam + 4.0 * c1 * r.C1 * g * g / (lam * lam)) * r.v_inf_bound;
  const double s_d8h = S(-0.5 * r.delta8, "S_minus_delta8_half");
  r.jacobian_bound = 4.0 * r.C2 * s_d8h * s_d8h;
  r.theta = 2.0 * (g / lam) * c1 * r.C1 + r.jacobian_bound;

  r.m_inf_bound = std::exp(r.vartheta) *
                  fluctuation_sup(spec.model, spec.model.eps1());
  r.m_inf_bound_tight = std::exp(r.vartheta) * spec.model.sup_density();

  r.contraction_ok = r.b_contraction < 1.0;
  r.lemma6_ok = r.b2_lemma6 < 0.5;
  r.lemma7_ok = r.b2_lemma7 < 0.5;
  r.lemma8_ok = r.b2_lemma8 < 0.5;
  r.lemma9_ok = r.b2_lemma9 < 0.5;
  r.jacobian_quarter_ok = r.b2_lemma7 < 0.25;
  r.lemma10_ok = spec.model.has_exponential_envelope() &&
                 r.theta < 0.5 * spec.model.eps2();
  r.core_ok = r.contraction_ok && r.lemma6_ok && r.lemma7_ok && r.lemma8_ok &&
              r.lemma9_ok;
  return r;
}

std::vector<std::pair<std::string, double>> ValidityReport::flat() const {
  std::vector<std::pair<std::string, double>> kv = {
      {"eta", eta},
      {"nu", nu},
      {"f_inf", f_inf},
      {"delta6", delta6},
      {"delta8", delta8},
      {"delta9", delta9},
      {"delta0", delta0},
      {"C1", C1},
      {"C2", C2},
      {"b_contraction", b_contraction},
      {"b2_lemma6", b2_lemma6},
      {"b2_lemma7", b2_lemma7},
      {"b2_lemma8", b2_lemma8},
      {"b2_lemma9", b2_lemma9},
      {"v_inf_bound", v_inf_bound},
      {"vartheta", vartheta},
      {"theta", theta},
      {"jacobian_bound", jacobian_bound},
      {"m_inf_bound", m_inf_bound},
      {"m_inf_bound_tight", m_inf_bound_tight},
      {"contraction_ok", contraction_ok ? 1.0 : 0.0},
      {"lemma6_ok", lemma6_ok ? 1.0 : 0.0},
      {"lemma7_ok", lemma7_ok ? 1.0 : 0.0},
      {"lemma8_ok", lemma8_ok ? 1.0 : 0.0},
      {"lemma9_ok", lemma9_ok ? 1.0 : 0.0},
      {"jacobian_quarter_ok", jacobian_quarter_ok ? 1.0 : 0.0},
      {"lemma10_ok", lemma10_ok ? 1.0 : 0.0},
      {"core_ok", core_ok ? 1.0 : 0.0},
  };
  for (const auto& [k, v] : s_values) kv.emplace_back(k, v);
  return kv;
}

// ---------------------------------------------------------- resample_map ----

std::vector<double> full_potential(const HamiltonianSpec& spec,
                                   const Realization& omega,
                                   const std::vector<double>& v_eff) {
  std::vector<double> u(omega.values.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    u[i] = omega.values[i] + spec.g / spec.lambda * v_eff[i];
  return u;
}

ResampleResult resample_map(const HamiltonianSpec& spec,
                            const Realization& omega,
                            const EffectivePotentialSolution& base,
                            int n0_box_index, double alpha, double tol) {
  std::vector<double> u_target = full_potential(spec, omega, base.v_eff);
  u_target[static_cast<std::size_t>(n0_box_index)] = alpha;

  ResampleResult out;
  out.omega_alpha = omega;
  FixedPointOptions opt;
  opt.tol = 0.1 * tol;
  opt.allow_outside_regime = true;
  opt.start = base.v_eff;

  for (int outer = 0; outer < 300; ++outer) {
    out.solution = solve_fixed_point(spec, out.omega_alpha, opt);
    opt.start = out.solution.v_eff;
    double delta = 0.0;
    for (std::size_t i = 0; i < u_target.size(); ++i) {
      const double next =
          u_target[i] - spec.g / spec.lambda * out.solution.v_eff[i];
      delta = std::max(delta, std::abs(next - out.omega_alpha.values[i]));
      out.omega_alpha.values[i] = next;
    }
    ++out.outer_iterations;
    if (delta < tol) {
      // final inner solve so the returned V_eff matches omega_alpha
      out.solution = solve_fixed_point(spec, out.omega_alpha, opt);
      return out;
    }
  }
  throw std::runtime_error("resample_map: no convergence");
}

}  // namespace hflab
