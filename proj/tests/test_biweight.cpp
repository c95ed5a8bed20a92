#include "robreg/biweight.hpp"
#include "robreg/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace robreg;

TEST_CASE("rho is continuous at the knot and psi is its derivative") {
  const double c = 2.5;
  CHECK(rho_biweight(c * (1 - 1e-12), c) == doctest::Approx(c * c / 6.0));
  CHECK(rho_biweight(10.0, c) == c * c / 6.0);
  CHECK(rho_biweight(0.0, c) == 0.0);
  const double h = 1e-6;
  for (double u : {-2.3, -1.0, -0.2, 0.4, 1.7, 2.4, 3.0}) {
    const double fd = (rho_biweight(u + h, c) - rho_biweight(u - h, c)) / (2 * h);
    const auto pw = psi_and_weight(u, c);
    CHECK(pw.psi == doctest::Approx(fd).epsilon(1e-7));
    if (u != 0.0) CHECK(pw.w == doctest::Approx(pw.psi / u));
    const double fd2 = (psi_and_weight(u + h, c).psi - psi_and_weight(u - h, c).psi) / (2 * h);
    if (std::abs(std::abs(u) - c) > 1e-3) CHECK(psi_prime_biweight(u, c) == doctest::Approx(fd2).epsilon(1e-6));
  }
  CHECK(psi_and_weight(0.0, c).w == 1.0);
}

TEST_CASE("50% breakdown tuning") {
  const auto t = tuning_from_bdp(0.5);
  CHECK(t.c == doctest::Approx(1.547645).epsilon(1e-6));
  CHECK(t.K == doctest::Approx(0.5 * t.c * t.c / 6.0));
  CHECK(expected_rho(t.c) == doctest::Approx(t.K).epsilon(1e-9));
  // Gaussian efficiency of the matching location estimator is about 28.7%.
  CHECK(t.eff == doctest::Approx(0.2868).epsilon(1e-3));
}

TEST_CASE("efficiency tuning reproduces the usual knots") {
  CHECK(tuning_from_efficiency(0.95) == doctest::Approx(4.685065).epsilon(1e-6));
  CHECK(tuning_from_efficiency(0.85) == doctest::Approx(3.443690).epsilon(1e-6));
  CHECK(tuning_from_efficiency(0.90) == doctest::Approx(3.882662).epsilon(1e-6));
}

TEST_CASE("efficiency by independent quadrature") {
  // Trapezoid on a fine grid, no shared code with the library integrator.
  const double c = 3.0;
  const int N = 200000;
  double dpsi = 0.0, psi2 = 0.0;
  for (int k = 0; k <= N; ++k) {
    const double z = -c + 2 * c * k / N;
    const double wgt = (k == 0 || k == N ? 0.5 : 1.0) * 2 * c / N * std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI);
    const double t = (z / c) * (z / c);
    dpsi += wgt * (1 - t) * (1 - 5 * t);
    psi2 += wgt * z * z * (1 - t) * (1 - t) * (1 - t) * (1 - t);
  }
  CHECK(biweight_efficiency(c) == doctest::Approx(dpsi * dpsi / psi2).epsilon(1e-8));
}

TEST_CASE("expected rho by Monte Carlo") {
  const auto t = tuning_from_bdp(0.25);
  CHECK(t.c == doctest::Approx(2.937015).epsilon(1e-6));
  RngStream rng(123, 0);
  const int N = 10'000'000;
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < N; ++i) {
    const double r = rho_biweight(rng.normal(), t.c);
    acc += r;
    acc2 += r * r;
  }
  const double mean = acc / N;
  const double se = std::sqrt((acc2 / N - mean * mean) / N);
  CHECK(std::abs(mean - t.K) < 4 * se);
}

TEST_CASE("M-scale is consistent, equivariant and handles exact fits") {
  const auto t = tuning_from_bdp(0.5);
  RngStream rng(9, 0);
  Vector r(20001);
  for (Index i = 0; i < r.size(); ++i) r(i) = 2.0 * rng.normal();
  const double s = mscale(r, t);
  CHECK(s == doctest::Approx(2.0).epsilon(0.03));
  // The defining equation holds.
  double acc = 0.0;
  for (Index i = 0; i < r.size(); ++i) acc += rho_biweight(r(i) / s, t.c);
  CHECK(acc / r.size() == doctest::Approx(t.K).epsilon(1e-9));
  CHECK(mscale(-3.5 * r, t) == doctest::Approx(3.5 * s).epsilon(1e-9));
  CHECK(mscale(r, t, 10.0) == doctest::Approx(s).epsilon(1e-9));

  Vector z = Vector::Zero(10);
  z.head(6) << 1, -2, 3, 4, 5, 6;
  CHECK(mscale(z, t) > 0.0);  // 6 of 10 nonzero
  z(5) = 1e-15;
  CHECK(mscale(z, t, 0.0, 1e-12) == 0.0);  // half are exact zeros
  CHECK_THROWS_AS(tuning_from_bdp(0.7), DomainError);
}

TEST_CASE("median") {
  Vector v(4);
  v << 4, 1, 3, 2;
  CHECK(median(v) == 2.5);
  CHECK(median(v.head(3)) == 3.0);
}
