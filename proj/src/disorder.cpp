#include "hflab/disorder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hflab/quadrature.hpp"
#include "hflab/rng.hpp"

namespace hflab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

DisorderModel DisorderModel::cauchy(double scale) {
  if (scale <= 0) throw std::invalid_argument("cauchy: scale <= 0");
  DisorderModel m;
  m.kind_ = Kind::cauchy;
  m.p1_ = scale;
  m.finalize_defaults();
  return m;
}

DisorderModel DisorderModel::two_sided_exponential(double c_rho) {
  if (c_rho <= 0) throw std::invalid_argument("two_sided_exponential: c <= 0");
  DisorderModel m;
  m.kind_ = Kind::two_sided_exponential;
  m.p1_ = c_rho;
  m.finalize_defaults();
  return m;
}

DisorderModel DisorderModel::perturbed_exponential(double c, double alpha,
                                                   double k, double eps) {
  if (c <= 0 || alpha <= 0 || k <= 1 || eps < 0)
    throw std::invalid_argument("perturbed_exponential: bad parameters");
  DisorderModel m;
  m.kind_ = Kind::perturbed_exponential;
  m.p1_ = c;
  m.p2_ = alpha;
  m.p3_ = k;
  m.p4_ = eps;
  // normalizer: 2 [ 1/a + eps Gamma(k+1)/a^{k+1} ], a = alpha + c
  const double a = alpha + c;
  const double z =
      2.0 * (1.0 / a + eps * std::tgamma(k + 1.0) / std::pow(a, k + 1.0));
  m.norm_ = 1.0 / z;
  m.finalize_defaults();
  return m;
}

DisorderModel DisorderModel::uniform(double half_width) {
  if (half_width <= 0) throw std::invalid_argument("uniform: width <= 0");
  DisorderModel m;
  m.kind_ = Kind::uniform_test;
  m.p1_ = half_width;
  m.finalize_defaults();
  return m;
}

void DisorderModel::finalize_defaults() {
  switch (kind_) {
    case Kind::cauchy:
      // max |d/dv log rho| = 1/scale, attained at v = +-scale
      c1_ = 1.0 / p1_;
      eps1_ = 0.1;
      eps2_ = 0.0;  // no exponential envelope
      break;
    case Kind::two_sided_exponential:
      c1_ = p1_;
      eps1_ = 0.1 * p1_;
      eps2_ = 0.01 * p1_;  // h is constant, any eps2 works
      break;
    case Kind::perturbed_exponential: {
      // log h slope is bounded by alpha + sup_v eps k v^{k-1}/(1+eps v^k)
      const double k = p3_, eps = p4_;
      double slope = 0.0;
      if (eps > 0) {
        const double v_star = std::pow((k - 1.0) / eps, 1.0 / k);
        slope = eps * k * std::pow(v_star, k - 1.0) /
                (1.0 + eps * std::pow(v_star, k));
      }
      eps2_ = 1.05 * (p2_ + slope);
      c1_ = p1_ + p2_ + slope;
      eps1_ = 0.1;
      break;
    }
    case Kind::uniform_test:
      c1_ = 0.0;
      eps1_ = 0.1;
      eps2_ = 0.0;
      break;
  }
}

void DisorderModel::declare_constants(double c1, double eps1, double eps2) {
  c1_ = c1;
  eps1_ = eps1;
  eps2_ = eps2;
}

std::vector<double> DisorderModel::params() const {
  switch (kind_) {
    case Kind::cauchy:
    case Kind::two_sided_exponential:
    case Kind::uniform_test:
      return {p1_};
    case Kind::perturbed_exponential:
      return {p1_, p2_, p3_, p4_};
  }
  return {};
}

std::string DisorderModel::name() const {
  switch (kind_) {
    case Kind::cauchy: return "cauchy";
    case Kind::two_sided_exponential: return "two_sided_exponential";
    case Kind::perturbed_exponential: return "perturbed_exponential";
    case Kind::uniform_test: return "uniform_test";
  }
  return "?";
}

double DisorderModel::density(double v) const {
  switch (kind_) {
    case Kind::cauchy:
      return p1_ / (kPi * (p1_ * p1_ + v * v));
    case Kind::two_sided_exponential:
      return 0.5 * p1_ * std::exp(-p1_ * std::abs(v));
    case Kind::perturbed_exponential:
      return norm_ * (1.0 + p4_ * std::pow(std::abs(v), p3_)) *
             std::exp(-(p2_ + p1_) * std::abs(v));
    case Kind::uniform_test:
      return (std::abs(v) <= p1_) ? 0.5 / p1_ : 0.0;
  }
  return 0.0;
}

double DisorderModel::log_density(double v) const {
  const double d = density(v);
  return d > 0 ? std::log(d) : -std::numeric_limits<double>::infinity();
}

double DisorderModel::cdf(double v) const {
  switch (kind_) {
    case Kind::cauchy:
      return 0.5 + std::atan(v / p1_) / kPi;
    case Kind::two_sided_exponential:
      return v < 0 ? 0.5 * std::exp(p1_ * v) : 1.0 - 0.5 * std::exp(-p1_ * v);
    case Kind::perturbed_exponential: {
      build_cdf_table();
      const auto& g = *cdf_grid_;
      const auto& c = *cdf_val_;
      if (v <= g.front()) return 0.0;
      if (v >= g.back()) return 1.0;
      auto it = std::upper_bound(g.begin(), g.end(), v);
      const std::size_t i = static_cast<std::size_t>(it - g.begin()) - 1;
      // linear-in-density correction on the subinterval (trapezoid)
      const double h = v - g[i];
      return c[i] + 0.5 * h * (density(g[i]) + density(v));
    }
    case Kind::uniform_test:
      if (v <= -p1_) return 0.0;
      if (v >= p1_) return 1.0;
      return 0.5 * (v / p1_ + 1.0);
  }
  return 0.0;
}

double DisorderModel::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("quantile: p outside (0,1)");
  switch (kind_) {
    case Kind::cauchy:
      return p1_ * std::tan(kPi * (p - 0.5));
    case Kind::two_sided_exponential:
      return p < 0.5 ? std::log(2.0 * p) / p1_
                     : -std::log(2.0 * (1.0 - p)) / p1_;
    case Kind::uniform_test:
      return p1_ * (2.0 * p - 1.0);
    case Kind::perturbed_exponential: {
      build_cdf_table();
      const auto& g = *cdf_grid_;
      const auto& c = *cdf_val_;
      auto it = std::upper_bound(c.begin(), c.end(), p);
      std::size_t i = it == c.begin()
                          ? 0
                          : static_cast<std::size_t>(it - c.begin()) - 1;
      i = std::min(i, g.size() - 2);
      double x = g[i] + (g[i + 1] - g[i]) * (p - c[i]) /
                            std::max(c[i + 1] - c[i], 1e-300);
      // Newton polish on the tabulated CDF
      for (int it2 = 0; it2 < 40; ++it2) {
        const double f = cdf(x) - p;
        const double d = density(x);
        if (d <= 0) break;
        const double step = f / d;
        x -= step;
        if (std::abs(step) < 1e-13 * (1.0 + std::abs(x))) break;
      }
      return x;
    }
  }
  return 0.0;
}

double DisorderModel::sup_density() const {
  switch (kind_) {
    case Kind::cauchy: return 1.0 / (kPi * p1_);
    case Kind::two_sided_exponential: return 0.5 * p1_;
    case Kind::uniform_test: return 0.5 / p1_;
    case Kind::perturbed_exponential: {
      // decays away from 0 once the polynomial loses to the exponential;
      // scan a fine grid out to where the density is negligible
      double best = 0.0;
      const double w = tail_radius(1e-12);
      for (int i = 0; i <= 20000; ++i)
        best = std::max(best, density(w * i / 20000.0));
      return best;
    }
  }
  return 0.0;
}

double DisorderModel::tail_radius(double mass) const {
  switch (kind_) {
    case Kind::cauchy:
      return p1_ / std::tan(kPi * std::min(0.499, 0.5 * mass));
    case Kind::two_sided_exponential:
      return -std::log(std::max(mass, 1e-300)) / p1_;
    case Kind::uniform_test:
      return p1_;
    case Kind::perturbed_exponential: {
      double w = 1.0;
      while (w < 1e6) {
        // tail of (1+eps v^k)e^{-av} past w, bounded by doubling the lead term
        const double a = p1_ + p2_;
        const double bound = 2.0 * norm_ *
                             (1.0 + p4_ * std::pow(w, p3_) * (1.0 + p3_ / (a * w))) *
                             std::exp(-a * w) / a * 2.0;
        if (bound < mass) return w;
        w *= 1.25;
      }
      return 1e6;
    }
  }
  return 0.0;
}

bool DisorderModel::has_exponential_envelope() const {
  return kind_ == Kind::two_sided_exponential ||
         kind_ == Kind::perturbed_exponential;
}

double DisorderModel::c_rho() const {
  if (!has_exponential_envelope())
    throw std::logic_error("c_rho: model has no exponential envelope");
  return p1_;
}

double DisorderModel::envelope_h(double v) const {
  if (!has_exponential_envelope())
    throw std::logic_error("envelope_h: model has no exponential envelope");
  return density(v) * std::exp(p1_ * std::abs(v));
}

void DisorderModel::build_cdf_table() const {
  if (cdf_grid_) return;
  const double w = tail_radius(1e-15);
  const int n = 16001;
  auto grid = std::make_shared<std::vector<double>>();
  auto val = std::make_shared<std::vector<double>>();
  grid->resize(n);
  val->resize(n);
  for (int i = 0; i < n; ++i) (*grid)[i] = -w + 2.0 * w * i / (n - 1);
  double acc = 0.0;
  (*val)[0] = 0.0;
  for (int i = 1; i < n; ++i) {
    acc += quad::gauss15([this](double x) { return density(x); }, (*grid)[i - 1],
                         (*grid)[i]);
    (*val)[i] = acc;
  }
  // normalize away the residual tail mass so the table is a proper CDF
  for (int i = 0; i < n; ++i) (*val)[i] /= acc;
  cdf_lo_ = -w;
  cdf_hi_ = w;
  cdf_grid_ = grid;
  cdf_val_ = val;
}

Realization sample(const DisorderModel& model, std::uint64_t seed,
                   const Box& box) {
  Realization r;
  r.seed = seed;
  r.values.resize(static_cast<std::size_t>(box.size()));
  for (int i = 0; i < box.size(); ++i) {
    rng::Stream s(seed);
    for (int c : box.site(i)) s.key(c);
    r.values[static_cast<std::size_t>(i)] = model.quantile(s.next_uniform());
  }
  return r;
}

double fluctuation_sup(const DisorderModel& model, double eps1, double v_max,
                       int n_grid) {
  if (eps1 <= 0) throw std::invalid_argument("fluctuation_sup: eps1 <= 0");
  // the weight kills everything past |a - v| = D0 (neglected mass < e^{-46})
  const double d0 = 46.0 / eps1;
  double sup = 0.0;
  for (int i = 0; i < n_grid; ++i) {
    const double v = -v_max + 2.0 * v_max * i / (n_grid - 1);
    auto integrand = [&](double a) {
      return model.density(a) * std::exp(-eps1 * std::abs(v - a));
    };
    const double lo = v - d0, hi = v + d0;
    // kinks at a = v and (for the exponential families) a = 0
    double cuts[2] = {std::min(0.0, v), std::max(0.0, v)};
    cuts[0] = std::clamp(cuts[0], lo, hi);
    cuts[1] = std::clamp(cuts[1], lo, hi);
    double z = 0.0;
    z += quad::integrate(integrand, lo, cuts[0], 1e-10);
    z += quad::integrate(integrand, cuts[0], cuts[1], 1e-10);
    z += quad::integrate(integrand, cuts[1], hi, 1e-10);
    if (z > 0) sup = std::max(sup, model.density(v) / z);
  }
  return sup;
}

AssumptionReport check_assumption6(const DisorderModel& model, double v_max,
                                   int n_grid) {
  AssumptionReport rep;
  std::vector<double> v(static_cast<std::size_t>(n_grid));
  for (int i = 0; i < n_grid; ++i)
    v[static_cast<std::size_t>(i)] = -v_max + 2.0 * v_max * i / (n_grid - 1);

  // support check first: the ratio bound is vacuous wherever rho vanishes
  for (double x : v) {
    if (!(model.density(x) > 0.0)) {
      rep.pass = false;
      rep.violations.emplace_back(x, 0.0);
      rep.detail = "density vanishes on the grid; supp rho != R";
      if (rep.violations.size() > 8) break;
    }
  }
  if (!rep.violations.empty()) return rep;

  // smallest Lipschitz constant of log rho observed on all grid pairs
  double c1 = 0.0;
  for (int i = 0; i < n_grid; ++i)
    for (int j = i + 1; j < n_grid; ++j) {
      const double num = std::abs(model.log_density(v[static_cast<std::size_t>(i)]) -
                                  model.log_density(v[static_cast<std::size_t>(j)]));
      c1 = std::max(c1, num / (v[static_cast<std::size_t>(j)] -
                               v[static_cast<std::size_t>(i)]));
    }
  rep.constant_found = c1;
  rep.fluct_sup = fluctuation_sup(model, model.eps1(), v_max, n_grid);
  rep.pass = std::isfinite(c1) && std::isfinite(rep.fluct_sup);
  if (model.c1() > 0 && c1 > model.c1() * (1.0 + 1e-9)) {
    rep.pass = false;
    rep.detail = "declared c1 too small for the observed log-density slope";
  }
  return rep;
}

AssumptionReport check_assumption7(const DisorderModel& model, double v_max,
                                   int n_grid) {
  AssumptionReport rep;
  if (!model.has_exponential_envelope()) {
    rep.pass = false;
    rep.detail = "model declares no exponential envelope";
    // demonstrate divergence of rho e^{c|v|} for a unit rate
    double prev = 0.0;
    for (double x : {5.0, 10.0, 20.0}) {
      const double g = model.density(x) * std::exp(x);
      if (g > prev) rep.violations.emplace_back(x, g);
      prev = g;
    }
    return rep;
  }
  const double c_rho = model.c_rho();
  std::vector<double> v(static_cast<std::size_t>(n_grid));
  for (int i = 0; i < n_grid; ++i)
    v[static_cast<std::size_t>(i)] = -v_max + 2.0 * v_max * i / (n_grid - 1);
  double eps2 = 0.0;
  for (int i = 0; i < n_grid; ++i)
    for (int j = i + 1; j < n_grid; ++j) {
      const double hi = std::log(model.envelope_h(v[static_cast<std::size_t>(i)]));
      const double hj = std::log(model.envelope_h(v[static_cast<std::size_t>(j)]));
      eps2 = std::max(eps2, std::abs(hi - hj) /
                                (v[static_cast<std::size_t>(j)] -
                                 v[static_cast<std::size_t>(i)]));
    }
  rep.constant_found = eps2;
  rep.pass = model.eps2() > 0 && model.eps2() < 0.5 * c_rho &&
             eps2 <= model.eps2() * (1.0 + 1e-9);
  if (!rep.pass && eps2 > model.eps2())
    rep.detail = "declared eps2 below the observed log-h slope";
  if (!(model.eps2() < 0.5 * c_rho))
    rep.detail = "eps2 must lie in (0, c_rho/2)";
  return rep;
}

}  // namespace hflab
