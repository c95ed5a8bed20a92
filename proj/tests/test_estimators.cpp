#include "robreg/estimators.hpp"
#include "robreg/linalg.hpp"

#include <boost/math/distributions/normal.hpp>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace robreg;

namespace {

Dataset line_with_outliers(Index n, Index p, Index n_out, std::uint64_t seed, double noise = 1.0) {
  RngStream rng(seed, 3);
  Matrix X(n, p);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Index j = 1; j < p; ++j) X(i, j) = rng.uniform(0.0, 10.0);
    y(i) = 2.0 + X.rightCols(p - 1).row(i).sum() + noise * rng.normal();
    if (i < n_out) y(i) += 40.0 + rng.uniform(0.0, 5.0);
  }
  return {y, X};
}

/// Minimum over all h-subsets of the OLS residual sum of squares.
double brute_force_lts(const Dataset& d, Index h) {
  const Index n = d.n();
  std::vector<bool> pick(static_cast<std::size_t>(n), false);
  std::fill(pick.begin(), pick.begin() + h, true);
  double best = std::numeric_limits<double>::infinity();
  do {
    IndexSet idx;
    for (Index i = 0; i < n; ++i)
      if (pick[static_cast<std::size_t>(i)]) idx.push_back(i);
    const Matrix X = gather_rows(d.X, idx);
    const Vector y = gather(d.y, idx);
    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    if (qr.rank() < d.p()) continue;
    best = std::min(best, (y - X * qr.solve(y)).squaredNorm());
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

}  // namespace

TEST_CASE("consistency factor by Monte Carlo") {
  RngStream rng(77, 0);
  const int N = 1'000'000;
  std::vector<double> sq(N);
  for (auto& v : sq) {
    const double z = rng.normal();
    v = z * z;
  }
  std::sort(sq.begin(), sq.end());
  for (double frac : {0.5, 0.6, 0.75, 0.9}) {
    const auto k = static_cast<std::size_t>(frac * N);
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += sq[i];
    CHECK(consistency_factor(frac) * std::sqrt(acc / static_cast<double>(k)) ==
          doctest::Approx(1.0).epsilon(3e-3));
    // Closed form for a symmetric truncation of one normal coordinate.
    boost::math::normal_distribution<double> nd;
    const double z = boost::math::quantile(nd, 0.5 + frac / 2);
    const double closed = 1.0 / std::sqrt(1.0 - 2.0 * z * boost::math::pdf(nd, z) / frac);
    CHECK(consistency_factor(frac) == doctest::Approx(closed).epsilon(1e-10));
  }
  CHECK(consistency_factor(1.0) == 1.0);
  CHECK_THROWS_AS(consistency_factor(0.3), DomainError);
}

TEST_CASE("small-sample correction tends to one") {
  CHECK(small_sample_correction(30, 2) > 1.0);
  CHECK(small_sample_correction(100000, 2) == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(small_sample_correction(50, 3, 1.0) == 1.0);
  CHECK(small_sample_correction(40, 3) > small_sample_correction(400, 3));
}

TEST_CASE("corrected LTS scale is median unbiased on clean data") {
  // Fresh seed, independent of the calibration runs.
  for (Index p : {2, 3}) {
    const Index n = 30, reps = 600;
    Vector s(reps);
    for (Index r = 0; r < reps; ++r) {
      RngStream rng(777, stream_key({static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(r)}));
      Matrix X(n, p);
      Vector y(n);
      for (Index i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (Index j = 1; j < p; ++j) X(i, j) = rng.normal();
        y(i) = 2.0 * rng.normal();
      }
      LtsConfig cfg;
      cfg.subset.rng = rng.substream(1);
      s(r) = lts_fit(Dataset{y, X}, cfg).sigma_hat / 2.0;
    }
    CHECK(median(s) == doctest::Approx(1.0).epsilon(0.04));
  }
}

TEST_CASE("elemental subsets") {
  ElementalSubsets all(6, 2, 100, RngStream(1, 1));
  CHECK(all.exhaustive());
  CHECK(all.count() == 15);
  IndexSet s, prev;
  Index seen = 0;
  while (all.next(s)) {
    CHECK(s.size() == 2);
    CHECK(s[0] < s[1]);
    if (seen > 0) CHECK(prev < s);
    prev = s;
    ++seen;
  }
  CHECK(seen == 15);
  ElementalSubsets some(50, 3, 20, RngStream(1, 1));
  CHECK_FALSE(some.exhaustive());
  Index drawn = 0;
  while (some.next(s)) ++drawn;
  CHECK(drawn == 20);
}

TEST_CASE("smallest rows breaks ties by index") {
  Vector v(6);
  v << 3, 1, 2, 1, 5, 2;
  CHECK(smallest_rows(v, 3) == IndexSet{1, 2, 3});
  CHECK(smallest_rows(v, 4) == IndexSet{1, 2, 3, 5});
}

TEST_CASE("LTS attains the exhaustive optimum on small samples") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Index p = seed % 2 == 0 ? 2 : 3;
    const Dataset d = line_with_outliers(12, p, 3, seed);
    const Index h = default_lts_h(12, p);
    LtsConfig cfg;
    cfg.subset.rng = RngStream(seed, 0);
    const FitResult fit = lts_fit(d, cfg);
    CHECK(fit.diagnostics.at("objective") == doctest::Approx(brute_force_lts(d, h)).epsilon(1e-9));
  }
}

TEST_CASE("LTS is regression, scale and affine equivariant") {
  const Dataset d = line_with_outliers(60, 3, 12, 5);
  LtsConfig cfg;
  cfg.subset.rng = RngStream(3, 3);
  const FitResult base = lts_fit(d, cfg);
  Vector g(3);
  g << 1.0, -2.0, 0.5;
  Dataset t{-3.0 * d.y + d.X * g, d.X};
  const FitResult moved = lts_fit(t, cfg);
  CHECK((moved.beta_hat - (-3.0 * base.beta_hat + g)).norm() < 1e-8);
  CHECK(moved.sigma_hat == doctest::Approx(3.0 * base.sigma_hat).epsilon(1e-9));
  Matrix A = Matrix::Identity(3, 3);
  A(1, 2) = 0.7;
  A(2, 2) = 2.0;
  const FitResult affine = lts_fit(Dataset{d.y, d.X * A}, cfg);
  CHECK((A * affine.beta_hat - base.beta_hat).norm() < 1e-8);
}

TEST_CASE("LTS ignores a minority of gross outliers") {
  const Dataset d = line_with_outliers(80, 2, 30, 8, 0.5);
  const FitResult fit = lts_fit(d);
  CHECK(std::abs(fit.beta_hat(1) - 1.0) < 0.1);
  CHECK(std::abs(fit.beta_hat(0) - 2.0) < 0.6);
  for (Index i = 0; i < 30; ++i) CHECK(fit.outlier_flags[static_cast<std::size_t>(i)]);
  const auto flags = outlier_test(d, fit, TestConfig{});
  CHECK(std::count(flags.begin(), flags.begin() + 30, true) == 30);
  CHECK(std::count(flags.begin() + 30, flags.end(), true) <= 1);

  const FitResult rw = lts_reweight(d, fit, TestConfig{});
  CHECK(rw.method == Method::LTSR);
  CHECK(rw.flagged_count() == std::count(flags.begin(), flags.end(), true));
  CHECK(rw.sigma_hat == doctest::Approx(0.5).epsilon(0.25));
}

TEST_CASE("exact fit gives zero scale") {
  Dataset d = line_with_outliers(30, 2, 0, 4, 0.0);
  for (Index i = 0; i < 10; ++i) d.y(i) += 7.0 + i;
  const FitResult lts = lts_fit(d);
  CHECK(lts.sigma_hat == 0.0);
  CHECK((lts.beta_hat - Vector::Ones(2) * 0 - (Vector(2) << 2.0, 1.0).finished()).norm() < 1e-9);
  const FitResult s = s_estimate(d);
  CHECK(s.sigma_hat == 0.0);
  CHECK(s.diagnostics.at("exact_fit") == 1.0);
  CHECK((s.beta_hat - (Vector(2) << 2.0, 1.0).finished()).norm() < 1e-9);
  const FitResult mm = mm_estimate(d, s);
  CHECK(mm.diagnostics.at("degenerate_scale") == 1.0);
  const auto flags = outlier_test(d, s, TestConfig{});
  CHECK(std::count(flags.begin(), flags.end(), true) == 10);
  CHECK_THROWS_AS(lts_reweight(d, lts, TestConfig{}), EstimationFailure);
}

TEST_CASE("S-estimate solves its scale equation and is equivariant") {
  const Dataset d = line_with_outliers(70, 3, 20, 12, 1.0);
  const auto t = tuning_from_bdp(0.5);
  SubsetConfig cfg;
  cfg.rng = RngStream(4, 4);
  const FitResult s = s_estimate(d, t, cfg);
  const Vector r = s.residuals(d);
  double acc = 0.0;
  for (Index i = 0; i < d.n(); ++i) acc += rho_biweight(r(i) / s.sigma_hat, t.c);
  CHECK(acc / d.n() == doctest::Approx(t.K).epsilon(1e-8));
  CHECK(std::abs(s.beta_hat(1) - 1.0) < 0.25);
  CHECK(std::abs(s.beta_hat(2) - 1.0) < 0.25);

  // No perturbation of beta lowers the scale: local minimum check.
  for (Index j = 0; j < 3; ++j)
    for (double step : {-1e-3, 1e-3}) {
      Vector b = s.beta_hat;
      b(j) += step;
      CHECK(mscale(d.y - d.X * b, t) >= s.sigma_hat * (1 - 1e-9));
    }

  Vector g(3);
  g << -1.0, 0.5, 3.0;
  const FitResult moved = s_estimate(Dataset{2.5 * d.y + d.X * g, d.X}, t, cfg);
  CHECK((moved.beta_hat - (2.5 * s.beta_hat + g)).norm() < 1e-8 * (1 + moved.beta_hat.norm()));
  CHECK(moved.sigma_hat == doctest::Approx(2.5 * s.sigma_hat).epsilon(1e-9));
  const FitResult mm = mm_estimate(d, s);
  const FitResult mm_moved = mm_estimate(Dataset{2.5 * d.y + d.X * g, d.X}, moved);
  CHECK((mm_moved.beta_hat - (2.5 * mm.beta_hat + g)).norm() < 1e-8 * (1 + mm_moved.beta_hat.norm()));

  Matrix A = Matrix::Identity(3, 3);
  A(0, 1) = -4.0;
  A(1, 1) = 0.3;
  A(2, 1) = 1.5;
  const FitResult s_aff = s_estimate(Dataset{d.y, d.X * A}, t, cfg);
  CHECK((A * s_aff.beta_hat - s.beta_hat).norm() < 1e-8 * (1 + s.beta_hat.norm()));
  const FitResult mm_aff = mm_estimate(Dataset{d.y, d.X * A}, s_aff);
  CHECK((A * mm_aff.beta_hat - mm.beta_hat).norm() < 1e-8 * (1 + mm.beta_hat.norm()));
}

TEST_CASE("MM is a fixed point of its IRWLS map and lowers the objective") {
  const Dataset d = line_with_outliers(90, 2, 15, 21, 1.0);
  const FitResult s = s_estimate(d);
  const FitResult mm = mm_estimate(d, s, 0.85);
  const double c = tuning_from_efficiency(0.85);
  CHECK(mm.sigma_hat == s.sigma_hat);
  CHECK(m_objective(d, mm.beta_hat, s.sigma_hat, c) <= m_objective(d, s.beta_hat, s.sigma_hat, c) + 1e-12);
  const Vector again = mm_irwls_step(d, mm.beta_hat, s.sigma_hat, c);
  CHECK((again - mm.beta_hat).norm() < 1e-6 * (1 + mm.beta_hat.norm()));
  // Estimating equation: sum psi(r/sigma) x = 0.
  const Vector r = mm.residuals(d);
  Vector score = Vector::Zero(2);
  for (Index i = 0; i < d.n(); ++i) score += psi_and_weight(r(i) / s.sigma_hat, c).psi * d.X.row(i).transpose();
  CHECK(score.norm() < 1e-5);
  CHECK(std::abs(mm.beta_hat(1) - 1.0) < 0.15);
}
