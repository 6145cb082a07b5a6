#include "hflab/quadrature.hpp"

#include <algorithm>
#include <cstdlib>
#include <queue>

namespace hflab::quad {

namespace {

// Abscissae/weights for 15-point Gauss-Legendre on [-1, 1].
constexpr double kX[15] = {
    -0.9879925180204854, -0.9372733924007060, -0.8482065834104272,
    -0.7244177313601701, -0.5709721726085388, -0.3941513470775634,
    -0.2011940939974345, 0.0,                 0.2011940939974345,
    0.3941513470775634,  0.5709721726085388,  0.7244177313601701,
    0.8482065834104272,  0.9372733924007060,  0.9879925180204854};
constexpr double kW[15] = {
    0.03075324199611727, 0.07036604748810812, 0.1071592204671719,
    0.1395706779261543,  0.1662692058169939,  0.1861610000155622,
    0.1984314853271116,  0.2025782419255613,  0.1984314853271116,
    0.1861610000155622,  0.1662692058169939,  0.1395706779261543,
    0.1071592204671719,  0.07036604748810812, 0.03075324199611727};

struct Panel {
  double err;
  double a, b;
  double value;
  bool operator<(const Panel& o) const { return err < o.err; }
};

}  // namespace

double gauss15(const Fn& f, double a, double b) {
  const double h = 0.5 * (b - a);
  const double c = 0.5 * (a + b);
  double acc = 0.0;
  for (int i = 0; i < 15; ++i) acc += kW[i] * f(c + h * kX[i]);
  return acc * h;
}

AdaptiveResult adaptive(const Fn& f, double a, double b, double tol,
                        int max_depth) {
  // Global strategy: keep a worst-first queue of panels and bisect the one
  // with the largest two-level discrepancy until the total estimated error
  // is under tol. Robust against integrands whose features live on scales
  // many orders below the interval length.
  AdaptiveResult out;
  if (a == b) return out;

  const long max_panels = 64L * (1L << std::min(max_depth, 9));
  auto make_panel = [&](double lo, double hi) {
    const double whole = gauss15(f, lo, hi);
    const double mid = 0.5 * (lo + hi);
    const double halves = gauss15(f, lo, mid) + gauss15(f, mid, hi);
    out.evaluations += 45;
    return Panel{std::abs(whole - halves), lo, hi, halves};
  };

  std::priority_queue<Panel> queue;
  double active_err = 0.0, active_val = 0.0;
  double frozen_err = 0.0, frozen_val = 0.0;  // panels rounding cannot split
  auto push = [&](const Panel& p) {
    active_err += p.err;
    active_val += p.value;
    queue.push(p);
  };
  push(make_panel(a, b));
  long panels = 1;
  while (frozen_err + active_err > tol && !queue.empty() &&
         panels < max_panels) {
    const Panel worst = queue.top();
    queue.pop();
    active_err -= worst.err;
    active_val -= worst.value;
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      frozen_err += worst.err;
      frozen_val += worst.value;
      continue;
    }
    push(make_panel(worst.a, mid));
    push(make_panel(mid, worst.b));
    ++panels;
  }
  out.value = frozen_val + active_val;
  out.error_estimate = frozen_err + active_err;
  out.converged = out.error_estimate <= tol;
  return out;
}

double integrate(const Fn& f, double a, double b, double tol) {
  AdaptiveResult r = adaptive(f, a, b, tol);
  if (!r.converged)
    throw std::runtime_error("quadrature did not converge to tolerance");
  return r.value;
}

double integrate_line(const Fn& f, double center, double scale, double tol) {
  if (scale <= 0.0) throw std::invalid_argument("integrate_line: scale <= 0");
  const double half_pi = std::asin(1.0);
  auto g = [&](double theta) {
    const double t = center + scale * std::tan(theta);
    const double c = std::cos(theta);
    return f(t) * scale / (c * c);
  };
  // tan(theta) overflows at the endpoints; the integrand is already tiny
  // there for anything with an integrable tail, so pull in by epsilon.
  const double eps = 1e-12;
  return integrate(g, -half_pi + eps, half_pi - eps, tol);
}

double integrate_power_singularity(const Fn& g, double a, double b, double x0,
                                   double s, double tol) {
  if (s < 0.0 || s >= 1.0)
    throw std::invalid_argument("integrate_power_singularity: s outside [0,1)");
  if (a > b) std::swap(a, b);
  auto full = [&](double v) { return g(v) * std::pow(std::abs(v - x0), -s); };

  // Away from the singular point plain adaptive panels suffice.
  if (x0 < a || x0 > b) return integrate(full, a, b, tol);

  double acc = 0.0;
  auto graded_side = [&](double h, int sign) {
    // panels [h 2^{-k-1}, h 2^{-k}] toward the singularity; on each the
    // weight |v-x0|^{-s} varies by at most 2^s, so GL15 handles it.
    if (h <= 0.0) return;
    double hi = h;
    for (int k = 0; k < 60 && hi > 0.0; ++k) {
      double lo = 0.5 * hi;
      double p = integrate(
          [&](double w) { return g(x0 + sign * w) * std::pow(w, -s); }, lo, hi,
          tol / 64.0);
      acc += p;
      // remaining mass near 0 is bounded by sup|g| * lo^{1-s}/(1-s)
      const double gm = std::abs(g(x0 + sign * 0.5 * lo)) + 1e-300;
      if (gm * std::pow(lo, 1.0 - s) / (1.0 - s) < 0.25 * tol) {
        acc += integrate(
            [&](double w) { return g(x0 + sign * w) * std::pow(w, -s); },
            lo * 1e-8, lo, tol / 64.0);
        break;
      }
      hi = lo;
    }
  };
  graded_side(x0 - a, -1);
  graded_side(b - x0, +1);
  return acc;
}

}  // namespace hflab::quad
