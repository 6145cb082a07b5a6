#include "hflab/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace hflab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

// ---------------------------------------------------------------- FSpec ----

FSpec FSpec::fermi_dirac(double beta, double mu_bar, double eta) {
  if (beta <= 0) throw std::invalid_argument("fermi_dirac: beta <= 0");
  if (eta <= 0 || eta >= kPi / beta)
    throw std::invalid_argument("fermi_dirac: need 0 < eta < pi/beta");
  FSpec f;
  f.kind = Kind::fermi_dirac;
  f.beta = beta;
  f.mu_bar = mu_bar;
  f.eta = eta;
  return f;
}

FSpec FSpec::analytic_test(double offset, double amp, double freq, double eta) {
  if (eta <= 0) throw std::invalid_argument("analytic_test: eta <= 0");
  FSpec f;
  f.kind = Kind::analytic_test;
  f.offset = offset;
  f.amp = amp;
  f.freq = freq;
  f.eta = eta;
  return f;
}

std::complex<double> FSpec::eval(std::complex<double> z) const {
  switch (kind) {
    case Kind::fermi_dirac: {
      const std::complex<double> w = beta * (z - mu_bar);
      if (w.real() > 0) {
        const std::complex<double> t = std::exp(-w);
        return t / (1.0 + t);
      }
      return 1.0 / (1.0 + std::exp(w));
    }
    case Kind::analytic_test:
      return offset + amp * std::cos(freq * z);
  }
  return 0.0;
}

double FSpec::eval_real(double x) const { return eval(x).real(); }

double FSpec::deriv_real(double x) const {
  switch (kind) {
    case Kind::fermi_dirac: {
      const double F = eval_real(x);
      return -beta * F * (1.0 - F);
    }
    case Kind::analytic_test:
      return -amp * freq * std::sin(freq * x);
  }
  return 0.0;
}

double FSpec::sup_on_strip() const {
  switch (kind) {
    case Kind::fermi_dirac: {
      const double c = std::cos(beta * eta);
      return c >= 0 ? 1.0 : 1.0 / std::abs(std::sin(beta * eta));
    }
    case Kind::analytic_test:
      return std::abs(offset) + std::abs(amp) * std::cosh(freq * eta);
  }
  return 0.0;
}

std::string FSpec::name() const {
  return kind == Kind::fermi_dirac ? "fermi_dirac" : "analytic_test";
}

// ------------------------------------------------------------ KernelSpec ----

double KernelSpec::eval(const Metric& metric, const Site& m,
                        const Site& n) const {
  switch (kind) {
    case Kind::kronecker:
      return m == n ? 1.0 : 0.0;
    case Kind::nearest_neighbor:
      return l1_dist(m, n) == 1 ? 1.0 : 0.0;
    case Kind::exponential:
    case Kind::log_polynomial:
      return C_a * std::exp(-gamma_a * metric(m, n));
  }
  return 0.0;
}

Eigen::MatrixXd KernelSpec::matrix(const Metric& metric, const Box& box) const {
  const int n = box.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  switch (kind) {
    case Kind::kronecker:
      a.setIdentity();
      return a;
    case Kind::nearest_neighbor:
      for (auto [i, j] : box.edges()) a(i, j) = a(j, i) = 1.0;
      return a;
    default:
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
          a(i, j) = a(j, i) = eval(metric, box.site(i), box.site(j));
      return a;
  }
}

std::string KernelSpec::name() const {
  switch (kind) {
    case Kind::kronecker: return "kronecker";
    case Kind::nearest_neighbor: return "nearest_neighbor";
    case Kind::exponential: return "exponential";
    case Kind::log_polynomial: return "log_polynomial";
  }
  return "?";
}

void KernelSpec::validate(const Metric& metric) const {
  if (C_a <= 0 || gamma_a <= 0)
    throw std::invalid_argument("kernel: C_a and gamma_a must be positive");
  if (kind == Kind::log_polynomial && metric.kind != Metric::Kind::scaled_log)
    throw std::invalid_argument(
        "kernel: log_polynomial requires the scaled_log metric");
  // declared envelope must dominate the kernel on the first few shells
  const double at0 = (kind == Kind::kronecker) ? 1.0 : 0.0;
  if (at0 > C_a * (1.0 + 1e-12))
    throw std::invalid_argument("kernel: envelope misses a(n,n)");
  if (kind == Kind::nearest_neighbor &&
      1.0 > C_a * std::exp(-gamma_a * metric.unit_step()) * (1.0 + 1e-12))
    throw std::invalid_argument(
        "kernel: envelope misses the nearest-neighbor shell; raise C_a");
}

void HamiltonianSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("spec: dim < 1");
  if (half_width < 0) throw std::invalid_argument("spec: half_width < 0");
  if (lambda == 0.0)
    throw std::invalid_argument("spec: lambda must be nonzero");
  kernel.validate(metric);
  if (metric.kind == Metric::Kind::scaled_log &&
      metric.kappa * (kernel.gamma_a / 2.0) <= dim)
    throw std::invalid_argument(
        "spec: scaled_log metric needs kappa*gamma_a/2 > dim for S_{delta-gamma}");
}

HamiltonianSpec canonical_spec() {
  HamiltonianSpec s;
  s.dim = 1;
  s.half_width = 7;
  s.lambda = 10.0;
  s.g = 1e-3;
  s.f = FSpec::fermi_dirac(kPi / 25.0, 0.0, 20.0);
  s.kernel.kind = KernelSpec::Kind::kronecker;
  s.kernel.C_a = 1.0;
  s.kernel.gamma_a = 2.0;
  s.metric.kind = Metric::Kind::ell1;
  s.model = DisorderModel::two_sided_exponential(1.0);
  s.model.declare_constants(1.0, 0.1, 0.01);
  return s;
}

// ------------------------------------------------------ AssembledOperator ----

AssembledOperator::AssembledOperator(Eigen::MatrixXd h,
                                     std::vector<int> box_indices)
    : h_(std::move(h)), box_indices_(std::move(box_indices)) {}

int AssembledOperator::local_index_of_box_index(int box_index) const {
  auto it = std::lower_bound(box_indices_.begin(), box_indices_.end(), box_index);
  if (it == box_indices_.end() || *it != box_index) return -1;
  return static_cast<int>(it - box_indices_.begin());
}

void AssembledOperator::ensure_eigen() const {
  if (!eig_) {
    eig_.emplace();
    eig_->compute(h_);
    if (eig_->info() != Eigen::Success)
      throw std::runtime_error("eigensolver failed");
  }
}

const Eigen::VectorXd& AssembledOperator::eigenvalues() const {
  ensure_eigen();
  return eig_->eigenvalues();
}

const Eigen::MatrixXd& AssembledOperator::eigenvectors() const {
  ensure_eigen();
  return eig_->eigenvectors();
}

Complex AssembledOperator::green(int i, int j, Complex z) const {
  ensure_eigen();
  const auto& E = eig_->eigenvalues();
  const auto& Q = eig_->eigenvectors();
  const double scale = 1.0 + E.cwiseAbs().maxCoeff();
  Complex acc(0.0, 0.0);
  for (int k = 0; k < size(); ++k) {
    const Complex den = E(k) - z;
    if (std::abs(den) < 1e-12 * scale)
      throw std::runtime_error("green: z collides with an eigenvalue");
    acc += Q(i, k) * Q(j, k) / den;
  }
  return acc;
}

Eigen::MatrixXcd AssembledOperator::green_matrix(Complex z) const {
  ensure_eigen();
  const auto& E = eig_->eigenvalues();
  const auto& Q = eig_->eigenvectors();
  const double scale = 1.0 + E.cwiseAbs().maxCoeff();
  Eigen::VectorXcd inv(size());
  for (int k = 0; k < size(); ++k) {
    const Complex den = E(k) - z;
    if (std::abs(den) < 1e-12 * scale)
      throw std::runtime_error("green_matrix: z collides with an eigenvalue");
    inv(k) = 1.0 / den;
  }
  return Q.cast<Complex>() * inv.asDiagonal() * Q.transpose().cast<Complex>();
}

double AssembledOperator::spectral_radius_bound() const {
  double best = 0.0;
  for (int i = 0; i < size(); ++i) best = std::max(best, h_.row(i).lpNorm<1>());
  return best;
}

AssembledOperator assemble(const HamiltonianSpec& spec,
                           const Realization& omega,
                           const std::vector<double>& v_eff,
                           const std::vector<int>& sub_sites) {
  const Box box = spec.box();
  if (static_cast<int>(omega.values.size()) != box.size() ||
      static_cast<int>(v_eff.size()) != box.size())
    throw std::invalid_argument("assemble: omega/v_eff not indexed by the box");

  std::vector<int> idx = sub_sites;
  if (idx.empty()) {
    idx.resize(static_cast<std::size_t>(box.size()));
    for (int i = 0; i < box.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
  } else {
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    for (int i : idx)
      if (i < 0 || i >= box.size())
        throw std::out_of_range("assemble: sub site outside the box");
  }

  const int n = static_cast<int>(idx.size());
  std::vector<int> local(static_cast<std::size_t>(box.size()), -1);
  for (int a = 0; a < n; ++a) local[static_cast<std::size_t>(idx[a])] = a;

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a)
    h(a, a) = spec.lambda * omega[idx[static_cast<std::size_t>(a)]] +
              spec.g * v_eff[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
  for (auto [i, j] : box.edges()) {
    const int a = local[static_cast<std::size_t>(i)];
    const int b = local[static_cast<std::size_t>(j)];
    if (a >= 0 && b >= 0) h(a, b) = h(b, a) = 1.0;
  }
  return AssembledOperator(std::move(h), std::move(idx));
}

// ------------------------------------------------------------ free_green ----

double free_ct_rate(int dim, double dist) {
  if (dist <= 0) return 0.0;
  return 0.95 * std::log1p(dist / (4.0 * dim));
}

namespace {

double dist_to_free_spectrum(int dim, Complex z) {
  const double band = 2.0 * dim;
  const double re = std::abs(z.real());
  const double im = std::abs(z.imag());
  if (re <= band) return im;
  return std::hypot(re - band, im);
}

// sparse adjacency solve (A - z) x = e_center on Box(dim, radius)
Eigen::VectorXcd adjacency_column(const Box& box, Complex z) {
  using T = Eigen::Triplet<Complex>;
  const int n = box.size();
  std::vector<T> trip;
  trip.reserve(static_cast<std::size_t>(n) * (2 * box.dim() + 1));
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, -z);
  for (auto [i, j] : box.edges()) {
    trip.emplace_back(i, j, Complex(1.0, 0.0));
    trip.emplace_back(j, i, Complex(1.0, 0.0));
  }
  Eigen::SparseMatrix<Complex> m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("free_green: sparse factorization failed");
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
  Site center(static_cast<std::size_t>(box.dim()), 0);
  rhs(box.index_of(center)) = 1.0;
  Eigen::VectorXcd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("free_green: sparse solve failed");
  return x;
}

// certified cut-bond truncation bound for |G - G_R|(0, w)
double truncation_bound(const Box& box, const Site& w, double dist, double nu) {
  const int L = box.half_width();
  const int d = box.dim();
  double acc = 0.0;
  for (const Site& a : box.sites()) {
    bool face = false;
    for (int c : a)
      if (std::abs(c) == L) face = true;
    if (!face) continue;
    for (int i = 0; i < d; ++i) {
      for (int s = -1; s <= 1; s += 2) {
        Site b = a;
        b[i] += s;
        if (box.contains(b)) continue;
        acc += std::exp(-nu * (static_cast<double>(l1_norm(b)) +
                               static_cast<double>(l1_dist(a, w))));
      }
    }
  }
  return acc * 4.0 / (dist * dist);
}

}  // namespace

FreeGreenColumn free_green_column(int dim, Complex z, int radius) {
  const double dist = dist_to_free_spectrum(dim, z);
  if (dist <= 0)
    throw std::domain_error("free_green: z on the spectrum of A");
  FreeGreenColumn col;
  col.radius = radius;
  col.ct_rate = free_ct_rate(dim, dist);
  const Box box(dim, radius);
  col.values = adjacency_column(box, z);
  Site origin(static_cast<std::size_t>(dim), 0);
  col.truncation_bound = truncation_bound(box, origin, dist, col.ct_rate);
  return col;
}

FreeGreenResult free_green(int dim, const Site& u, const Site& v, Complex z,
                           double accuracy, int radius_cap) {
  const double dist = dist_to_free_spectrum(dim, z);
  if (dist <= 0)
    throw std::domain_error("free_green: z on the spectrum of A");
  const double nu = free_ct_rate(dim, dist);
  Site w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = v[i] - u[i];

  int radius = static_cast<int>(l1_norm(w)) + 6;
  while (true) {
    const Box box(dim, radius);
    const double bound = truncation_bound(box, w, dist, nu);
    if (bound <= accuracy) {
      Eigen::VectorXcd col = adjacency_column(box, z);
      FreeGreenResult out;
      out.value = col(box.index_of(w));
      out.truncation_bound = bound;
      out.radius = radius;
      return out;
    }
    if (radius >= radius_cap)
      throw std::runtime_error(
          "free_green: radius cap reached before certification");
    radius = std::min(radius_cap, radius * 2);
  }
}

// --------------------------------------------------------- Combes-Thomas ----

double pick_nu(const Metric& metric, int dim, double eta, double margin) {
  const double target = margin * 0.5 * eta;
  const double unit = metric.unit_step();
  double nu = 0.0;
  for (double cand = 1e-3; cand < 50.0; cand += 1e-3) {
    if (2.0 * dim * std::exp(cand * unit) <= target)
      nu = cand;
    else
      break;
  }
  return nu;
}

CombesThomasCertificate combes_thomas_check(const AssembledOperator& op,
                                            const Box& box, double eta,
                                            const Metric& metric, double nu,
                                            int t_points) {
  CombesThomasCertificate cert;
  cert.nu = nu;
  cert.eta = eta;
  const double sum = 2.0 * box.dim() * std::exp(nu * metric.unit_step());
  cert.admissible = sum < 0.5 * eta;
  if (!cert.admissible) return cert;

  const double T = op.spectral_radius_bound() + 1.0;
  const int n = op.size();
  for (int it = 0; it < t_points; ++it) {
    const double t = -T + 2.0 * T * it / std::max(1, t_points - 1);
    // G(t - i eta) is the entrywise conjugate, so one sign suffices
    const Eigen::MatrixXcd g = op.green_matrix(Complex(t, eta));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double d = metric(box.site(op.box_indices()[static_cast<std::size_t>(i)]),
                                box.site(op.box_indices()[static_cast<std::size_t>(j)]));
        const double ratio = std::abs(g(i, j)) * 0.5 * eta * std::exp(nu * d);
        cert.max_ratio = std::max(cert.max_ratio, ratio);
        if (ratio > 1.0 + 1e-12) ++cert.violations;
      }
  }
  cert.slack = 1.0 - cert.max_ratio;
  return cert;
}

}  // namespace hflab
