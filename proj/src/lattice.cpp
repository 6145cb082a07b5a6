#include "hflab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hflab {

long long l1_norm(const Site& a) {
  long long r = 0;
  for (int c : a) r += std::abs(static_cast<long long>(c));
  return r;
}

long long l1_dist(const Site& a, const Site& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("l1_dist: dimension mismatch");
  long long r = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    r += std::abs(static_cast<long long>(a[i]) - b[i]);
  return r;
}

double Metric::operator()(const Site& a, const Site& b) const {
  return from_l1(l1_dist(a, b));
}

double Metric::from_l1(long long r) const {
  switch (kind) {
    case Kind::ell1:
      return static_cast<double>(r);
    case Kind::scaled_log:
      return kappa * std::log1p(static_cast<double>(r));
  }
  return 0.0;
}

std::string Metric::name() const {
  return kind == Kind::ell1 ? "ell1" : "scaled_log";
}

Box::Box(int dim, int half_width, long long site_cap)
    : dim_(dim), half_width_(half_width) {
  if (dim < 1) throw std::invalid_argument("Box: dim must be >= 1");
  if (half_width < 0) throw std::invalid_argument("Box: half_width < 0");
  const long long side = 2LL * half_width + 1;
  long long n = 1;
  for (int i = 0; i < dim; ++i) {
    if (n > site_cap / side)
      throw std::length_error("Box: site count exceeds configured cap");
    n *= side;
  }
  sites_.reserve(static_cast<std::size_t>(n));
  Site cur(dim, -half_width);
  while (true) {
    sites_.push_back(cur);
    int i = dim - 1;
    while (i >= 0 && cur[i] == half_width) cur[i--] = -half_width;
    if (i < 0) break;
    ++cur[i];
  }
  // lexicographic enumeration makes neighbor indices computable by stride
  std::vector<long long> stride(dim, 1);
  for (int i = dim - 2; i >= 0; --i) stride[i] = stride[i + 1] * side;
  for (int idx = 0; idx < size(); ++idx) {
    for (int i = 0; i < dim; ++i) {
      if (sites_[idx][i] < half_width)
        edges_.emplace_back(idx, idx + static_cast<int>(stride[i]));
    }
  }
}

bool Box::contains(const Site& s) const {
  if (static_cast<int>(s.size()) != dim_) return false;
  for (int c : s)
    if (c < -half_width_ || c > half_width_) return false;
  return true;
}

int Box::index_of(const Site& s) const {
  if (!contains(s)) throw std::out_of_range("Box::index_of: site outside box");
  const long long side = 2LL * half_width_ + 1;
  long long idx = 0;
  for (int i = 0; i < dim_; ++i) idx = idx * side + (s[i] + half_width_);
  return static_cast<int>(idx);
}

Box make_box(int dim, int half_width) { return Box(dim, half_width); }

std::uint64_t l1_sphere_count(int dim, long long k) {
  if (k < 0) return 0;
  if (k == 0) return 1;
  // sum over the number j of nonzero coordinates
  auto binom = [](long long n, long long r) -> double {
    if (r < 0 || r > n) return 0.0;
    double v = 1.0;
    for (long long i = 1; i <= r; ++i) v = v * (n - r + i) / i;
    return v;
  };
  double total = 0.0;
  for (int j = 1; j <= std::min<long long>(dim, k); ++j)
    total += std::ldexp(binom(dim, j), j) * binom(k - 1, j - 1);
  return static_cast<std::uint64_t>(std::llround(total));
}

namespace {

// N_k <= 2^d C(k+d-1, d-1); ratio of consecutive bounds is (k+d)/(k+1).
double sphere_count_upper(int dim, long long k) {
  double v = 1.0;
  for (int i = 1; i <= dim - 1; ++i)
    v = v * static_cast<double>(k + i) / i;
  return std::ldexp(v, dim);
}

}  // namespace

ExpSumResult exp_sum(const Metric& metric, int dim, double beta, double tol,
                     long long radius_cap) {
  if (dim < 1) throw std::invalid_argument("exp_sum: dim must be >= 1");
  if (metric.kind == Metric::Kind::ell1 && beta >= 0.0)
    throw std::domain_error("exp_sum diverges: beta >= 0 on ell1 metric");
  if (metric.kind == Metric::Kind::scaled_log &&
      metric.kappa * (-beta) <= static_cast<double>(dim))
    throw std::domain_error("exp_sum diverges: kappa*|beta| <= dim");

  ExpSumResult out;
  double acc = 0.0;
  for (long long k = 0; k <= radius_cap; ++k) {
    acc += static_cast<double>(l1_sphere_count(dim, k)) *
           std::exp(beta * metric.from_l1(k));
    // certified tail bound past radius k
    double tail = std::numeric_limits<double>::infinity();
    if (metric.kind == Metric::Kind::ell1) {
      const double q = std::exp(beta) * static_cast<double>(k + 1 + dim) /
                       static_cast<double>(k + 2);
      if (q < 1.0)
        tail = sphere_count_upper(dim, k + 1) * std::exp(beta * (k + 1)) /
               (1.0 - q);
    } else {
      // N_j (1+j)^{kappa beta} <= c_d (1+j)^{d-1+kappa beta}; integral
      // comparison of the decreasing summand
      const double p = dim - 1 + metric.kappa * beta;  // < -1 by the domain check
      const double c_d = std::ldexp(std::pow(static_cast<double>(dim), dim - 1), dim);
      tail = c_d * std::pow(static_cast<double>(k + 1), p + 1.0) / (-(p + 1.0));
    }
    if (tail <= tol) {
      out.value = acc;
      out.tail_bound = tail;
      out.radius = k;
      return out;
    }
  }
  throw std::runtime_error("exp_sum: radius cap reached before tail bound met");
}

double exp_sum_box(const Metric& metric, double beta, const Site& center,
                   const Box& box) {
  double acc = 0.0;
  for (const Site& v : box.sites()) acc += std::exp(beta * metric(center, v));
  return acc;
}

double exp_sum_box_sup(const Metric& metric, double beta, const Box& box) {
  double best = 0.0;
  for (const Site& u : box.sites())
    best = std::max(best, exp_sum_box(metric, beta, u, box));
  return best;
}

std::vector<Site> augmented_boundary(const Box& box) {
  std::vector<Site> out;
  const int L = box.half_width();
  const int d = box.dim();
  // interior part: sites of the box touching the complement
  for (const Site& s : box.sites()) {
    bool on_face = false;
    for (int c : s)
      if (std::abs(c) == L) on_face = true;
    if (on_face) out.push_back(s);
  }
  // exterior part: one coordinate sticking out by exactly one
  for (const Site& s : box.sites()) {
    for (int i = 0; i < d; ++i) {
      if (s[i] == L) {
        Site t = s;
        t[i] += 1;
        out.push_back(t);
      }
      if (s[i] == -L) {
        Site t = s;
        t[i] -= 1;
        out.push_back(t);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double metric_dist_to_boundary(const Metric& metric, const Site& s,
                               const Box& box) {
  double best = std::numeric_limits<double>::infinity();
  for (const Site& u : augmented_boundary(box))
    best = std::min(best, metric(s, u));
  return best;
}

}  // namespace hflab
