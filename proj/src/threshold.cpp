#include "hflab/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hflab/hamiltonian.hpp"

namespace hflab {

namespace {
constexpr double kE = 2.71828182845904523536;
}

double gamma_factor(double s, double lambda, double m_inf) {
  if (s < 0.0 || s >= 1.0) throw std::domain_error("gamma_factor: s outside [0,1)");
  if (lambda <= 0.0 || m_inf <= 0.0)
    throw std::domain_error("gamma_factor: lambda, M must be positive");
  return std::pow(2.0 * m_inf / lambda, s) / (1.0 - s);
}

double optimal_exponent(double lambda, double m_inf) {
  const double x = lambda / (2.0 * m_inf);
  if (!(x > kE)) throw std::domain_error("optimal_exponent: lambda/2M must exceed e");
  return 1.0 - 1.0 / std::log(x);
}

ThresholdResult solve_threshold(double m_inf, double mu) {
  if (m_inf <= 0.0) throw std::domain_error("solve_threshold: M <= 0");
  if (mu < 1.0) throw std::domain_error("solve_threshold: no root for mu < 1");
  ThresholdResult out;
  out.m = m_inf;
  out.mu = mu;

  // reduced variable x = lambda / 2M: phi(x) = x - mu e ln x, convex with
  // minimum at x* = mu e and phi(x*) = -mu e ln(mu)
  auto phi = [&](double x) { return x - mu * kE * std::log(x); };
  const double x_star = mu * kE;
  double x;
  if (std::abs(phi(x_star)) < 1e-12 * x_star) {
    out.tangent = true;
    x = x_star;
  } else {
    double hi = std::max(2.0 * x_star, kE * kE);
    while (phi(hi) < 0) hi *= 2.0;
    double lo = x_star;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (phi(mid) < 0 ? lo : hi) = mid;
    }
    x = 0.5 * (lo + hi);
    // Newton polish
    for (int it = 0; it < 8; ++it) {
      const double d = 1.0 - mu * kE / x;
      if (d <= 0) break;
      x -= phi(x) / d;
    }
    out.bracket_lo = 2.0 * m_inf * x_star;
    out.bracket_hi = 2.0 * m_inf * x * 1.0000000001;
  }
  out.lambda_star = 2.0 * m_inf * x;
  out.residual = std::abs(out.lambda_star -
                          2.0 * m_inf * mu * kE *
                              std::log(out.lambda_star / (2.0 * m_inf)));
  out.branch_ok = (1.0 - mu * kE / x) >= -1e-12;
  return out;
}

WeakThresholdResult weak_threshold(double e_lo, double e_hi, int e_points,
                                   const DecouplingTable& decoupling, int dim,
                                   const std::vector<double>& mu_grid,
                                   const std::vector<double>& delta_grid,
                                   double accuracy) {
  if (e_points < 1) throw std::invalid_argument("weak_threshold: e_points < 1");
  const double band = 2.0 * dim;
  for (int i = 0; i < e_points; ++i) {
    const double e = e_lo + (e_hi - e_lo) * (e_points == 1 ? 0.0 : double(i) / (e_points - 1));
    if (std::abs(e) <= band)
      throw std::domain_error("weak_threshold: energy meets the free spectrum");
  }

  WeakThresholdResult out;
  for (std::size_t si = 0; si < decoupling.s.size(); ++si) {
    const double s = decoupling.s[si];
    if (s <= 0.0 || s >= 1.0) continue;
    const double d_s1 = decoupling.d_s1[si];
    for (double mu : mu_grid) {
      WeakThresholdRow row;
      row.s = s;
      row.mu = mu;
      double worst_lambda = std::numeric_limits<double>::infinity();
      for (int i = 0; i < e_points; ++i) {
        const double e = e_lo + (e_hi - e_lo) *
                                    (e_points == 1 ? 0.0 : double(i) / (e_points - 1));
        double sup_sum = 0.0;
        double sup_tail = 0.0;
        bool certified = true;
        for (double delta : delta_grid) {
          const Complex z(e, delta);
          const double dist =
              std::abs(e) > band ? std::hypot(std::abs(e) - band, delta) : delta;
          const double rate = free_ct_rate(dim, dist);
          const double q = std::exp(mu - s * rate);
          double sum = 0.0, tail = 0.0, prev = -1.0;
          bool this_certified = false;
          for (int radius = 24; radius <= 1536; radius *= 2) {
            const FreeGreenColumn col = free_green_column(dim, z, radius);
            const Box box(dim, radius);
            sum = 0.0;
            for (int k = 0; k < box.size(); ++k)
              sum += std::pow(std::abs(col.values(k)), s) *
                     std::exp(mu * static_cast<double>(l1_norm(box.site(k))));
            if (q < 1.0) {
              // tail over |v| > R of ((2/dist) e^{-rate |v|})^s e^{mu |v|};
              // shell counts enter through a one-step ratio margin
              const double ratio =
                  q * std::pow(double(radius + 2 + dim) / (radius + 2), dim - 1);
              if (ratio < 1.0) {
                tail = static_cast<double>(l1_sphere_count(dim, radius + 1)) *
                       std::pow(2.0 / dist, s) *
                       std::exp((mu - s * rate) * (radius + 1)) / (1.0 - ratio);
                if (tail < accuracy * std::max(1.0, sum)) {
                  this_certified = true;
                  break;
                }
              }
            } else if (prev >= 0.0 &&
                       std::abs(sum - prev) < accuracy * std::max(1.0, sum)) {
              break;  // stabilized without a closed-form tail
            }
            prev = sum;
          }
          certified = certified && this_certified;
          if (sum + tail > sup_sum + sup_tail) {
            sup_sum = sum;
            sup_tail = tail;
          }
        }
        row.certified = certified;
        const double lam = std::pow(d_s1 * (sup_sum + sup_tail), -1.0 / s);
        if (lam < worst_lambda) {
          worst_lambda = lam;
          row.worst_e = e;
          row.sum = sup_sum;
          row.tail_bound = sup_tail;
        }
      }
      row.lambda_hat = worst_lambda;
      out.rows.push_back(row);
      if (row.lambda_hat > out.lambda0) {
        out.lambda0 = row.lambda_hat;
        out.best_s = s;
        out.best_mu = mu;
      }
    }
  }
  return out;
}

std::vector<StabilityRow> stability_sweep(const HamiltonianSpec& base,
                                          const std::vector<double>& g_values,
                                          double mu_d) {
  std::vector<StabilityRow> rows;
  const double rho_sup = base.model.sup_density();
  const ThresholdResult anderson = solve_threshold(rho_sup, mu_d);
  for (double g : g_values) {
    HamiltonianSpec spec = base;
    spec.g = g;
    const ValidityReport v = validity_check(spec);
    StabilityRow r;
    r.g = g;
    r.vartheta = v.vartheta;
    r.m_inf = v.m_inf_bound_tight;
    r.lambda_hf = solve_threshold(r.m_inf, mu_d).lambda_star;
    r.lambda_and = anderson.lambda_star;
    r.gap = std::abs(r.lambda_hf - r.lambda_and);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace hflab
