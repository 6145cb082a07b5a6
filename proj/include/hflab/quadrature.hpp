#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

// Small adaptive quadrature toolkit. Everything works on plain callables and
// returns certified-ish values: the adaptive driver subdivides until the
// two-level Gauss-Legendre discrepancy is below the requested tolerance.
namespace hflab::quad {

using Fn = std::function<double(double)>;

// 15-point Gauss-Legendre rule on [a, b].
double gauss15(const Fn& f, double a, double b);

struct AdaptiveResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
  long evaluations = 0;
};

// Adaptive bisection with GL15 panels. Absolute tolerance.
AdaptiveResult adaptive(const Fn& f, double a, double b, double tol,
                        int max_depth = 48);

// Convenience: value only, throws on non-convergence.
double integrate(const Fn& f, double a, double b, double tol);

// Integral over the whole real line via t = center + scale * tan(theta).
// Captures slowly decaying tails exactly; scale should match the natural
// width of the integrand.
double integrate_line(const Fn& f, double center, double scale, double tol);

// Integral of g(v) * |v - x0|^{-s} over [a, b] with x0 inside or at the
// boundary, s in [0, 1). Panels are graded dyadically toward the singular
// point so each panel sees a smooth integrand.
double integrate_power_singularity(const Fn& g, double a, double b, double x0,
                                   double s, double tol);

}  // namespace hflab::quad
