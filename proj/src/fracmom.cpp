#include "hflab/fracmom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hflab/rng.hpp"

namespace hflab {

namespace {

// batch-means standard error with 20 batches
double batch_se(const std::vector<double>& x) {
  const int b = 20;
  const int n = static_cast<int>(x.size());
  if (n < 2 * b) {
    double m = 0, v = 0;
    for (double t : x) m += t;
    m /= n;
    for (double t : x) v += (t - m) * (t - m);
    return std::sqrt(v / (n - 1.0) / n);
  }
  const int per = n / b;
  std::vector<double> means;
  for (int i = 0; i < b; ++i) {
    double m = 0;
    for (int j = i * per; j < (i + 1) * per; ++j) m += x[static_cast<std::size_t>(j)];
    means.push_back(m / per);
  }
  double mm = 0, vv = 0;
  for (double t : means) mm += t;
  mm /= b;
  for (double t : means) vv += (t - mm) * (t - mm);
  return std::sqrt(vv / (b - 1.0) / b);
}

template <typename Eval>
MomentEstimate mc_run(const HamiltonianSpec& spec, int samples,
                      std::uint64_t base_seed, Eval&& eval) {
  const Box box = spec.box();
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(samples));
  int failures = 0;
  FixedPointOptions opt;
  opt.tol = 1e-12;
  opt.allow_outside_regime = true;
  for (int i = 0; i < samples; ++i) {
    const Realization om = sample(spec.model, rng::mix(base_seed, i), box);
    try {
      const EffectivePotentialSolution sol = solve_fixed_point(spec, om, opt);
      vals.push_back(eval(om, sol));
    } catch (const std::runtime_error&) {
      ++failures;
      if (failures * 100 > samples)
        throw std::runtime_error("mc: more than 1% of samples failed");
    }
  }
  MomentEstimate est;
  est.samples = static_cast<int>(vals.size());
  est.failures = failures;
  est.base_seed = base_seed;
  double m = 0;
  for (double v : vals) m += v;
  est.mean = vals.empty() ? 0.0 : m / static_cast<double>(vals.size());
  est.std_error = vals.empty() ? 0.0 : batch_se(vals);
  return est;
}

}  // namespace

MomentEstimate mc_frac_moment(const HamiltonianSpec& spec, const Site& m,
                              const Site& n, Complex z, double s, int samples,
                              std::uint64_t base_seed) {
  if (!(s > 0.0 && s < 1.0))
    throw std::domain_error("mc_frac_moment: s outside (0,1)");
  if (z.imag() == 0.0)
    throw std::domain_error("mc_frac_moment: need Im z != 0");
  const Box box = spec.box();
  const int im = box.index_of(m);
  const int in = box.index_of(n);
  MomentEstimate est = mc_run(
      spec, samples, base_seed,
      [&](const Realization& om, const EffectivePotentialSolution& sol) {
        AssembledOperator op = assemble(spec, om, sol.v_eff);
        return std::pow(std::abs(op.green(im, in, z)), s);
      });
  est.s = s;
  est.z = z;
  est.dist = static_cast<double>(l1_dist(m, n));
  return est;
}

CorrelatorValue correlator(const AssembledOperator& op, int i, int j,
                           double e_lo, double e_hi) {
  const auto& E = op.eigenvalues();
  const auto& Q = op.eigenvectors();
  CorrelatorValue out;
  out.min_gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k + 1 < op.size(); ++k)
    out.min_gap = std::min(out.min_gap, E(k + 1) - E(k));
  for (int k = 0; k < op.size(); ++k)
    if (E(k) >= e_lo && E(k) <= e_hi)
      out.value += std::abs(Q(i, k)) * std::abs(Q(j, k));
  return out;
}

MomentEstimate mc_correlator(const HamiltonianSpec& spec, const Site& m,
                             const Site& n, double e_lo, double e_hi,
                             int samples, std::uint64_t base_seed) {
  const Box box = spec.box();
  const int im = box.index_of(m);
  const int in = box.index_of(n);
  MomentEstimate est = mc_run(
      spec, samples, base_seed,
      [&](const Realization& om, const EffectivePotentialSolution& sol) {
        AssembledOperator op = assemble(spec, om, sol.v_eff);
        return correlator(op, im, in, e_lo, e_hi).value;
      });
  est.dist = static_cast<double>(l1_dist(m, n));
  return est;
}

DecayFit decay_fit(const std::vector<MomentEstimate>& points) {
  std::vector<double> x, y, w;
  for (const auto& p : points) {
    if (!(p.mean > 0.0)) continue;
    const double rel = p.std_error / p.mean;
    if (rel > 0.25) continue;
    x.push_back(p.dist);
    y.push_back(std::log(p.mean));
    const double sigma = std::max(rel, 1e-12);  // sd of log(mean)
    w.push_back(1.0 / (sigma * sigma));
  }
  if (x.size() < 4)
    throw std::runtime_error("decay_fit: fewer than 4 usable distances");

  DecayFit fit;
  fit.points_used = static_cast<int>(x.size());
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
    swxx += w[i] * x[i] * x[i];
    swxy += w[i] * x[i] * y[i];
  }
  const double det = sw * swxx - swx * swx;
  const double slope = (sw * swxy - swx * swy) / det;
  const double icept = (swxx * swy - swx * swxy) / det;
  fit.rate = -slope;
  fit.log_prefactor = icept;
  fit.rate_std_error = std::sqrt(sw / det);

  double ss_res = 0, ss_tot = 0;
  const double ybar = swy / sw;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double pred = icept + slope * x[i];
    ss_res += w[i] * (y[i] - pred) * (y[i] - pred);
    ss_tot += w[i] * (y[i] - ybar) * (y[i] - ybar);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

std::vector<VolumeConvergenceRow> volume_convergence(
    const HamiltonianSpec& base, const std::vector<int>& half_widths,
    int reference_half_width, std::uint64_t seed, double t, double kappa) {
  FixedPointOptions opt;
  opt.tol = 1e-13;
  opt.allow_outside_regime = true;

  // largest box first; coordinate-keyed sampling couples the realizations
  HamiltonianSpec ref_spec = base;
  ref_spec.half_width = reference_half_width;
  const Box ref_box = ref_spec.box();
  const Realization ref_om = sample(base.model, seed, ref_box);
  const EffectivePotentialSolution ref_sol =
      solve_fixed_point(ref_spec, ref_om, opt);

  const ValidityReport validity = validity_check(ref_spec);
  const double delta = std::min(validity.nu, base.kernel.gamma_a) * 0.9;
  const double c_a = base.kernel.C_a;
  const double f_inf = base.f.sup_on_strip();
  const double s_nu =
      exp_sum(base.metric, base.dim, -std::max(validity.nu, 1e-6)).value;
  // reference prefactor of Lemma-14 type (reported curve, not an asserted
  // bound: the g-independent boundary-hopping effect is not included)
  const double c_pref =
      432.0 * c_a * f_inf * std::abs(base.g) * s_nu / base.f.eta + 3.0 * f_inf;

  std::vector<VolumeConvergenceRow> rows;
  const Site origin(static_cast<std::size_t>(base.dim), 0);

  std::vector<double> veff_at_center;
  std::vector<Complex> green_own, green_ref;
  for (int L : half_widths) {
    HamiltonianSpec spec_l = base;
    spec_l.half_width = L;
    const Box box_l = spec_l.box();
    const Realization om_l = sample(base.model, seed, box_l);
    const EffectivePotentialSolution sol_l = solve_fixed_point(spec_l, om_l, opt);
    veff_at_center.push_back(
        sol_l.v_eff[static_cast<std::size_t>(box_l.index_of(origin))]);

    // restriction of the reference V_eff to this box
    std::vector<double> v_ref(static_cast<std::size_t>(box_l.size()));
    for (int i = 0; i < box_l.size(); ++i)
      v_ref[static_cast<std::size_t>(i)] =
          ref_sol.v_eff[static_cast<std::size_t>(ref_box.index_of(box_l.site(i)))];
    AssembledOperator own = assemble(spec_l, om_l, sol_l.v_eff);
    AssembledOperator with_ref = assemble(spec_l, om_l, v_ref);
    const int c = box_l.index_of(origin);
    const Complex z(t, kappa);
    green_own.push_back(own.green(c, c, z));
    green_ref.push_back(with_ref.green(c, c, z));
  }

  for (std::size_t i = 0; i < half_widths.size(); ++i) {
    VolumeConvergenceRow row;
    row.half_width = half_widths[i];
    HamiltonianSpec spec_l = base;
    spec_l.half_width = half_widths[i];
    row.boundary_dist =
        metric_dist_to_boundary(base.metric, origin, spec_l.box());
    const double next =
        i + 1 < half_widths.size()
            ? veff_at_center[i + 1]
            : ref_sol.v_eff[static_cast<std::size_t>(ref_box.index_of(origin))];
    row.veff_diff = std::abs(veff_at_center[i] - next);
    row.veff_bound = c_pref * std::exp(-delta * row.boundary_dist);
    row.green_diff = std::abs(green_own[i] - green_ref[i]);
    row.green_bound = 4.0 * c_pref / (kappa * kappa) *
                      std::exp(-delta * row.boundary_dist) * s_nu;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hflab
