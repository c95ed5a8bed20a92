#include "robreg/linalg.hpp"
#include "robreg/scenario.hpp"

#include <boost/math/distributions/normal.hpp>
#include <doctest.h>

#include <cmath>

using namespace robreg;

namespace {

TrueModel example1() {
  TrueModel m;
  m.alpha = 10.0;
  m.beta = Vector::Constant(1, 3.0);
  m.sigma_eps = 10.0;
  m.region = {{0.0, 10.0}};
  return m;
}

M2Spec example1_m2(double lambda) {
  M2Spec s;
  s.mu = mu_of_lambda(example1(), 0.0, 10.0, lambda);
  s.Sigma.resize(2, 2);
  s.Sigma << 20, 2, 2, 20;
  return s;
}

double mc_strip(const TrueModel& model, const M2Spec& m2, const OverlapConfig& cfg, int draws, std::uint64_t seed) {
  RngStream rng(seed, 0);
  const MvnSampler mvn(m2);
  const double half = cfg.strip_multiplier * model.sigma_eps;
  int in = 0;
  for (int i = 0; i < draws; ++i) {
    const Vector w = mvn.draw(rng);
    const double lin = w(0) - model.beta.dot(w.tail(model.slopes()));
    in += std::abs(lin - model.alpha) <= half;
  }
  return static_cast<double>(in) / draws;
}

}  // namespace

TEST_CASE("contamination centre path") {
  const TrueModel m = example1();
  CHECK((mu_of_lambda(m, 0.0, 10.0, 1.0) - (Vector(2) << 25, 5).finished()).norm() < 1e-12);
  CHECK((mu_of_lambda(m, 0.0, 10.0, 0.0) - (Vector(2) << 10, 10).finished()).norm() < 1e-12);
  // On the regression line at lambda = 1 when d = 0.
  const Vector c = mu_of_lambda(m, 0.0, 10.0, 1.0);
  CHECK(c(0) - m.alpha - m.beta.dot(c.tail(1)) == doctest::Approx(0.0));
  // Affine in lambda: second differences vanish.
  for (double l = -3; l < 4; l += 0.5) {
    const Vector dd = mu_of_lambda(m, 2.0, 3.0, l + 1) - 2 * mu_of_lambda(m, 2.0, 3.0, l) + mu_of_lambda(m, 2.0, 3.0, l - 1);
    CHECK(dd.norm() < 1e-12);
  }
  // Several carriers: displacement applies to every coordinate.
  TrueModel m3;
  m3.alpha = 5;
  m3.beta = Vector::Constant(5, 5.0);
  m3.sigma_eps = 10;
  m3.region = {{0.0, 2 * std::sqrt(10.0)}};
  const Vector c3 = mu_of_lambda(m3, 2.0, 3.0, 1.0);
  CHECK(c3.tail(5).isApproxToConstant(std::sqrt(10.0) + 2.0));
  CHECK(c3(0) == doctest::Approx(5 + 25 * (std::sqrt(10.0) + 2.0)));
  CHECK(mu_of_lambda(m3, 2.0, 3.0, 0.0).isApproxToConstant(3.0));
}

TEST_CASE("mixture sampling") {
  const TrueModel m = example1();
  RngStream rng(1, 1);
  SUBCASE("clean sample recovers the model") {
    const Dataset d = sample_mixture(m, example1_m2(1.0), 400, 0, rng);
    CHECK(d.count(Source::M1) == 400);
    const FitResult fit = ols_fit(d);
    const Matrix cov = fit.sigma_hat * fit.sigma_hat * (d.X.transpose() * d.X).inverse();
    CHECK(std::abs(fit.beta_hat(0) - 10.0) < 3 * std::sqrt(cov(0, 0)));
    CHECK(std::abs(fit.beta_hat(1) - 3.0) < 3 * std::sqrt(cov(1, 1)));
  }
  SUBCASE("degenerate normal") {
    M2Spec s = example1_m2(2.0);
    s.Sigma.setZero();
    const Dataset d = sample_mixture(m, s, 10, 5, rng);
    for (Index i = 10; i < 15; ++i) {
      CHECK(d.y(i) == doctest::Approx(s.mu(0)));
      CHECK(d.X(i, 1) == doctest::Approx(s.mu(1)));
      CHECK(d.X(i, 0) == 1.0);
    }
  }
  SUBCASE("moments of the contaminating rows") {
    const M2Spec s = example1_m2(-1.0);
    const Dataset d = sample_mixture(m, s, 0, 40000, rng);
    Matrix W(d.n(), 2);
    W.col(0) = d.y;
    W.col(1) = d.X.col(1);
    const Vector mean = W.colwise().mean();
    const Matrix centred = W.rowwise() - mean.transpose();
    const Matrix cov = centred.transpose() * centred / (d.n() - 1.0);
    CHECK((mean - s.mu).norm() < 0.1);
    CHECK((cov - s.Sigma).cwiseAbs().maxCoeff() < 0.8);
  }
  SUBCASE("fixed carriers are reused") {
    RngStream a(3, 3);
    const Matrix x = draw_carriers(m, 20, a);
    const Dataset d1 = sample_mixture(m, example1_m2(0.0), 20, 3, rng, &x);
    const Dataset d2 = sample_mixture(m, example1_m2(3.0), 20, 3, rng, &x);
    CHECK(d1.X.topRows(20) == d2.X.topRows(20));
    CHECK(d1.y.head(20) != d2.y.head(20));
  }
  SUBCASE("overlapping populations at lambda = 1") {
    const Dataset d = sample_mixture(m, example1_m2(1.0), 100, 30, rng);
    const double m1 = d.y.head(100).mean(), m2 = d.y.tail(30).mean();
    const double v1 = (d.y.head(100).array() - m1).square().sum() / 99;
    const double v2 = (d.y.tail(30).array() - m2).square().sum() / 29;
    CHECK(std::abs(m1 - m2) / std::sqrt(v1 / 100 + v2 / 30) < 3.0);
  }
  M2Spec bad = example1_m2(0.0);
  bad.Sigma << 1, 2, 2, 1;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("point contamination") {
  const Dataset base{Vector::Zero(4), Matrix::Ones(4, 2)};
  const Dataset d = point_contaminate(base, Vector::Constant(1, 0.5), 0.0, 30);
  CHECK(d.n() == 34);
  CHECK(d.count(Source::M2) == 30);
  CHECK(d.X(33, 1) == 0.5);
  CHECK(point_contaminate(base, Vector::Constant(1, 2.0), 1.0, 1).count(Source::M2) == 1);
  CHECK_THROWS_AS(point_contaminate(base, Vector::Constant(1, 2.0), 1.0, 0), DomainError);
}

TEST_CASE("empirical overlap") {
  const TrueModel m = example1();
  OverlapConfig cfg;
  RngStream rng(5, 5);
  M2Spec on_line;
  on_line.mu = (Vector(2) << 25, 5).finished();
  on_line.Sigma = (Matrix(2, 2) << 9, 3, 3, 1).finished();  // y - 3x degenerate: on the line
  const Dataset d = sample_mixture(m, on_line, 10, 200, rng);
  // Conditional mean is on the line for every x; only carriers outside [0, 10] miss.
  Index in_region = 0;
  for (Index i = 10; i < 210; ++i) in_region += d.X(i, 1) >= 0 && d.X(i, 1) <= 10;
  CHECK(empirical_overlap(d, m, on_line, cfg) == doctest::Approx(in_region / 200.0));

  const M2Spec far = example1_m2(4.0);
  const Dataset d2 = sample_mixture(m, far, 50, 30, rng);
  CHECK(empirical_overlap(d2, m, far, cfg) < 0.05);
  CHECK_THROWS_AS(empirical_overlap(sample_mixture(m, far, 5, 0, rng), m, far, cfg), DomainError);
}

TEST_CASE("theoretical overlap") {
  const TrueModel m = example1();
  OverlapConfig cfg;
  boost::math::normal_distribution<double> nd;
  SUBCASE("centred") {
    const M2Spec s = example1_m2(1.0);
    const double sd = std::sqrt(20.0 + 9 * 20 - 2 * 3 * 2);
    CHECK(theoretical_overlap(m, s, cfg) == doctest::Approx(2 * boost::math::cdf(nd, 20.0 / sd) - 1));
  }
  SUBCASE("point mass") {
    M2Spec s = example1_m2(1.0);
    s.Sigma.setZero();
    CHECK(theoretical_overlap(m, s, cfg) == 1.0);
    s.mu(0) += 25.0;
    CHECK(theoretical_overlap(m, s, cfg) == 0.0);
  }
  SUBCASE("invariant to rescaling the response") {
    const M2Spec s = example1_m2(2.2);
    TrueModel m2 = m;
    M2Spec s2 = s;
    const double t = -3.7;
    m2.alpha *= t;
    m2.beta *= t;
    m2.sigma_eps *= std::abs(t);
    s2.mu(0) *= t;
    s2.Sigma.row(0) *= t;
    s2.Sigma.col(0) *= t;
    CHECK(theoretical_overlap(m2, s2, cfg) == doctest::Approx(theoretical_overlap(m, s, cfg)).epsilon(1e-12));
  }
  SUBCASE("Monte Carlo strip probability") {
    for (double l : {-1.0, 0.5, 1.0, 2.0}) {
      const M2Spec s = example1_m2(l);
      CHECK(std::abs(theoretical_overlap(m, s, cfg) - mc_strip(m, s, cfg, 200000, 11)) < 0.005);
    }
  }
  SUBCASE("peak at lambda = 1, at least the empirical index on average") {
    double best = -1, best_l = 0;
    for (double l = -3; l <= 4.0001; l += 0.5) {
      const double v = theoretical_overlap(m, example1_m2(l), cfg);
      if (v > best) best = v, best_l = l;
    }
    CHECK(best_l == 1.0);
    CHECK(best < 1.0);
    RngStream rng(6, 6);
    double emp = 0;
    for (int r = 0; r < 100; ++r) emp += empirical_overlap(sample_mixture(m, example1_m2(1.0), 100, 30, rng), m, example1_m2(1.0), cfg);
    CHECK(emp / 100 <= best);
  }
  CHECK(cfg.gamma() == doctest::Approx(0.0455002638));
}

TEST_CASE("Mahalanobis distance") {
  CHECK(mahalanobis_sq((Vector(2) << 3, 4).finished(), Vector::Zero(2), Matrix::Identity(2, 2)) == doctest::Approx(25));
  CHECK(mahalanobis_sq(Vector::Ones(2), Vector::Ones(2), Matrix::Identity(2, 2)) == 0.0);
  CHECK_THROWS_AS(mahalanobis_sq(Vector::Ones(2), Vector::Zero(2), Matrix::Zero(2, 2)), DomainError);
  const TrueModel m = example1();
  const Matrix S = example1_m2(0).Sigma;
  CHECK(mahalanobis_sq(m1_centre(m), mu_of_lambda(m, 0, 10, 1.0), S) == doctest::Approx(0.0).epsilon(1e-12));
  double prev = mahalanobis_sq(m1_centre(m), mu_of_lambda(m, 0, 10, -3), S);
  for (double l = -2.5; l <= 1.0; l += 0.5) {
    const double v = mahalanobis_sq(m1_centre(m), mu_of_lambda(m, 0, 10, l), S);
    CHECK(v < prev);
    prev = v;
  }
  // Example 2: displaced centres never meet.
  TrueModel m2;
  m2.alpha = 10;
  m2.beta = Vector::Constant(1, 1.0);
  m2.sigma_eps = 10;
  m2.region = {{0.0, 2.0}};
  const Matrix S2 = (Matrix(2, 2) << 4, 0, 0, 0.1).finished();
  for (double l = 1.5; l <= 7; l += 0.5) CHECK(mahalanobis_sq(m1_centre(m2), mu_of_lambda(m2, 2, 3.4, l), S2) > 1.0);
}
