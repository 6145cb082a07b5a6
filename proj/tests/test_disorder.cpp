#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hflab/disorder.hpp"
#include "hflab/quadrature.hpp"

using namespace hflab;

namespace {

double total_mass(const DisorderModel& m) {
  // tan substitution captures both exponential and polynomial tails
  return quad::integrate_line([&](double v) { return m.density(v); }, 0.0,
                              2.0, 1e-11);
}

double ks_statistic(const DisorderModel& m, std::uint64_t seed, int n) {
  const Box box = make_box(1, n / 2);
  Realization r = sample(m, seed, box);
  std::sort(r.values.begin(), r.values.end());
  double ks = 0.0;
  const int count = static_cast<int>(r.values.size());
  for (int i = 0; i < count; ++i) {
    const double f = m.cdf(r.values[static_cast<std::size_t>(i)]);
    ks = std::max(ks, std::abs(f - (i + 1.0) / count));
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / count));
  }
  return ks;
}

}  // namespace

TEST_CASE("density point values") {
  CHECK(DisorderModel::cauchy(1.0).density(0.0) ==
        doctest::Approx(0.3183098861837907));
  const DisorderModel e = DisorderModel::two_sided_exponential(1.0);
  CHECK(e.density(0.0) == doctest::Approx(0.5));
  CHECK(e.density(2.0) == doctest::Approx(0.5 * std::exp(-2.0)));
  CHECK(e.density(2.0) == doctest::Approx(0.06766764161830635));
}

TEST_CASE("densities integrate to one") {
  for (const DisorderModel& m :
       {DisorderModel::cauchy(1.0), DisorderModel::cauchy(2.5),
        DisorderModel::two_sided_exponential(1.0),
        DisorderModel::two_sided_exponential(0.4),
        DisorderModel::perturbed_exponential(1.0, 0.05, 2.0, 0.01),
        DisorderModel::uniform(1.0)}) {
    CHECK(std::abs(total_mass(m) - 1.0) < 1e-8);
  }
}

TEST_CASE("sampling is deterministic and restriction-compatible") {
  const DisorderModel m = DisorderModel::two_sided_exponential(1.0);
  const Box big = make_box(1, 9);
  const Box small = make_box(1, 4);
  const Realization a = sample(m, 77, big);
  const Realization b = sample(m, 77, big);
  CHECK(a.values == b.values);
  const Realization c = sample(m, 77, small);
  for (int i = 0; i < small.size(); ++i)
    CHECK(c[i] == a[big.index_of(small.site(i))]);
  const Realization d = sample(m, 78, big);
  CHECK(a.values != d.values);
}

TEST_CASE("sample statistics: symmetric mean and cauchy median") {
  const DisorderModel e = DisorderModel::two_sided_exponential(1.0);
  const Box box = make_box(1, 500000);  // 10^6 + 1 draws
  const Realization r = sample(e, 5, box);
  double mean = 0.0;
  for (double v : r.values) mean += v;
  mean /= static_cast<double>(r.values.size());
  // variance of the unit two-sided exponential is 2
  const double se = std::sqrt(2.0 / static_cast<double>(r.values.size()));
  CHECK(std::abs(mean) < 3.0 * se);

  const DisorderModel c = DisorderModel::cauchy(1.0);
  const Box box2 = make_box(1, 50000);
  Realization r2 = sample(c, 11, box2);
  std::nth_element(r2.values.begin(),
                   r2.values.begin() + r2.values.size() / 2, r2.values.end());
  const double median = r2.values[r2.values.size() / 2];
  // se of the sample median is 1/(2 f(0) sqrt(n)) = (pi/2)/sqrt(n)
  const double se_med =
      0.5 / (c.density(0.0) * std::sqrt(static_cast<double>(r2.values.size())));
  CHECK(std::abs(median) < 3.0 * se_med);
}

TEST_CASE("inverse-CDF sampling passes a KS test at the 1% level") {
  const double critical = 1.628;  // K-S critical value, alpha = 0.01
  for (const DisorderModel& m :
       {DisorderModel::cauchy(1.0), DisorderModel::two_sided_exponential(1.0),
        DisorderModel::perturbed_exponential(1.0, 0.05, 2.0, 0.01)}) {
    const int n = 100001;
    const double ks = ks_statistic(m, 99, n);
    CHECK(ks * std::sqrt(static_cast<double>(n)) < critical);
  }
}

TEST_CASE("assumption 6: exponential and cauchy pass, uniform fails") {
  const DisorderModel e = DisorderModel::two_sided_exponential(1.0);
  const AssumptionReport re = check_assumption6(e);
  CHECK(re.pass);
  CHECK(re.constant_found == doctest::Approx(1.0).epsilon(1e-6));

  DisorderModel c = DisorderModel::cauchy(1.0);
  const AssumptionReport rc = check_assumption6(c);
  CHECK(rc.pass);
  CHECK(rc.constant_found <= c.c1() + 1e-9);

  const AssumptionReport ru = check_assumption6(DisorderModel::uniform(1.0));
  CHECK_FALSE(ru.pass);
  CHECK_FALSE(ru.violations.empty());
}

TEST_CASE("assumption 6 fluctuation supremum stays near the density sup") {
  const DisorderModel e = DisorderModel::two_sided_exponential(1.0);
  // closed form: sup_v rho/(int rho e^{-eps|v-a|} da) = (1+eps)/2 at v=0
  const double got = fluctuation_sup(e, 0.1);
  CHECK(got == doctest::Approx(0.55).epsilon(1e-4));
  CHECK(fluctuation_sup(e, 0.01) == doctest::Approx(0.505).epsilon(1e-4));
}

TEST_CASE("assumption 7: envelope families pass, cauchy fails") {
  const AssumptionReport re =
      check_assumption7(DisorderModel::two_sided_exponential(1.0));
  CHECK(re.pass);
  CHECK(re.constant_found == doctest::Approx(0.0).epsilon(1e-9));

  const AssumptionReport rp = check_assumption7(
      DisorderModel::perturbed_exponential(1.0, 0.05, 2.0, 0.01));
  CHECK(rp.pass);
  CHECK(rp.constant_found > 0.0);

  const AssumptionReport rc = check_assumption7(DisorderModel::cauchy(1.0));
  CHECK_FALSE(rc.pass);
}

TEST_CASE("declared ratio bound holds on sampled pairs") {
  const DisorderModel m = DisorderModel::perturbed_exponential(1.0, 0.05, 2.0, 0.01);
  const Box box = make_box(1, 2000);
  const Realization r = sample(m, 123, box);
  for (std::size_t i = 0; i + 1 < r.values.size(); i += 2) {
    const double v1 = r.values[i], v2 = r.values[i + 1];
    const double lr = m.log_density(v1) - m.log_density(v2);
    CHECK(lr >= -m.c1() * std::abs(v1 - v2) - 1e-9);
  }
}

TEST_CASE("quantile round trip") {
  for (const DisorderModel& m :
       {DisorderModel::two_sided_exponential(2.0),
        DisorderModel::perturbed_exponential(1.0, 0.05, 2.0, 0.01)}) {
    for (double p : {0.01, 0.2, 0.5, 0.8, 0.99})
      CHECK(m.cdf(m.quantile(p)) == doctest::Approx(p).epsilon(1e-6));
  }
}
