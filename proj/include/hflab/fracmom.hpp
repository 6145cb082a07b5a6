#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "hflab/effpot.hpp"

namespace hflab {

struct MomentEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // batch means
  int samples = 0;
  int failures = 0;
  double s = 0.0;
  Complex z{0.0, 0.0};
  double dist = 0.0;  // |m - n| in l1
  std::uint64_t base_seed = 0;
};

// Monte-Carlo E |G^{box}(m, n; z)|^s: per sample draw omega, solve the fixed
// point, assemble and evaluate. Per-sample seeds derive from (base_seed, i);
// solver failures are excluded and counted, aborting above 1%.
MomentEstimate mc_frac_moment(const HamiltonianSpec& spec, const Site& m,
                              const Site& n, Complex z, double s, int samples,
                              std::uint64_t base_seed);

// Eigenfunction correlator of an assembled restriction over the energy
// window [e_lo, e_hi]: sum over eigenvalues in the window of
// |psi_k(i)| |psi_k(j)| (the Borel supremum is attained by sign alignment).
struct CorrelatorValue {
  double value = 0.0;
  double min_gap = 0.0;  // smallest eigenvalue spacing, degeneracy diagnostic
};
CorrelatorValue correlator(const AssembledOperator& op, int i, int j,
                           double e_lo, double e_hi);

// Monte-Carlo E Q_I(m, n) with the same sampling discipline as
// mc_frac_moment.
MomentEstimate mc_correlator(const HamiltonianSpec& spec, const Site& m,
                             const Site& n, double e_lo, double e_hi,
                             int samples, std::uint64_t base_seed);

struct DecayFit {
  double rate = 0.0;        // xi-hat, the fitted exponential rate
  double rate_std_error = 0.0;
  double log_prefactor = 0.0;
  double r2 = 0.0;
  int points_used = 0;
};

// Weighted least squares of log(mean) against distance; points with
// relative standard error above 25% (or nonpositive mean) are dropped.
DecayFit decay_fit(const std::vector<MomentEstimate>& points);

struct VolumeConvergenceRow {
  int half_width = 0;
  double boundary_dist = 0.0;   // d(n, augmented boundary) in the kernel metric
  double veff_diff = 0.0;       // |V_eff,L(n) - V_eff,L'(n)|, L' next larger
  double veff_bound = 0.0;      // reference curve C e^{-delta d(n, dLambda_L)}
  double green_diff = 0.0;      // restriction Green's functions, see below
  double green_bound = 0.0;
};

// Nested boxes share disorder through coordinate-keyed sampling. For each L
// the row compares V_eff on box L against box L' (the next entry, or the
// reference box), and the Green's functions at z = t + i kappa of the two
// operators restricted to box L: one carrying its own V_eff, one carrying
// the reference box's restriction.
std::vector<VolumeConvergenceRow> volume_convergence(
    const HamiltonianSpec& base, const std::vector<int>& half_widths,
    int reference_half_width, std::uint64_t seed, double t = 0.0,
    double kappa = 1e-2);

}  // namespace hflab
