#include "robreg/metrics.hpp"
#include "robreg/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace robreg;

TEST_CASE("bias norm") {
  InformationMatrix I{Matrix::Identity(2, 2)};
  CHECK(bias_norm(Vector::Ones(2), Vector::Ones(2), I) == 0.0);
  CHECK(bias_norm((Vector(2) << 4, 6).finished(), (Vector(2) << 1, 2).finished(), I) == doctest::Approx(5.0));

  // Orthogonal invariance: rotate the error and the information matrix jointly.
  RngStream rng(2, 2);
  Matrix A(3, 3);
  for (Index i = 0; i < 9; ++i) A(i / 3, i % 3) = rng.normal();
  InformationMatrix info{A * A.transpose() + Matrix::Identity(3, 3)};
  const Vector b = rng.normal_vector(3), t = rng.normal_vector(3);
  const Matrix Q = Eigen::HouseholderQR<Matrix>(A).householderQ();
  InformationMatrix rotated{Q * info.I * Q.transpose()};
  CHECK(bias_norm(Q * b, Q * t, rotated) == doctest::Approx(bias_norm(b, t, info)).epsilon(1e-12));
}

TEST_CASE("analytic information matrix matches sample moments") {
  TrueModel m;
  m.beta = Vector::Zero(2);
  m.region = {{0.0, 10.0}, {-1.0, 3.0}};
  const auto I = InformationMatrix::analytic_uniform(m);
  CHECK(I.I(0, 1) == doctest::Approx(5.0));
  CHECK(I.I(1, 1) == doctest::Approx(100.0 / 3.0));
  RngStream rng(3, 3);
  const Index n = 1'000'000;
  Dataset d{Vector::Zero(n), Matrix(n, 3)};
  for (Index i = 0; i < n; ++i) {
    d.X(i, 0) = 1;
    d.X(i, 1) = rng.uniform(0, 10);
    d.X(i, 2) = rng.uniform(-1, 3);
  }
  const auto E = InformationMatrix::empirical(d);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) CHECK(E.I(i, j) == doctest::Approx(I.I(i, j)).epsilon(5e-3));
  CHECK((I.I - I.I.transpose()).norm() == 0.0);
}

TEST_CASE("replicate summaries") {
  std::vector<Vector> same(5, Vector::Constant(2, 3.0));
  const auto s = accumulate(same, Vector::Constant(2, 1.0));
  CHECK(s[0].variance == 0.0);
  CHECK(s[0].mad == 0.0);
  CHECK(s[1].sq_bias == doctest::Approx(4.0));

  RngStream rng(4, 4);
  std::vector<Vector> z;
  for (int r = 0; r < 10000; ++r) z.push_back(rng.normal_vector(2));
  const auto t = accumulate(z, Vector::Zero(2));
  for (const auto& c : t) {
    CHECK(c.variance == doctest::Approx(1.0).epsilon(0.05));
    CHECK(c.mad / 0.6744897502 == doctest::Approx(1.0).epsilon(0.05));
    CHECK(std::sqrt(c.sq_bias) < 3 * c.se_mean);
  }
  CHECK_THROWS_AS(accumulate({Vector::Zero(1)}, Vector::Zero(1)), DomainError);
}

TEST_CASE("partial sums") {
  CHECK(partial_sums({2.5}) == std::vector<double>{2.5});
  CHECK(partial_sums({0, 0, 0}) == std::vector<double>{0, 0, 0});
  CHECK(partial_sums({1, 2, 3}) == std::vector<double>{1, 3, 6});
}

TEST_CASE("power and size are exact counts") {
  Dataset d{Vector::Zero(5), Matrix::Ones(5, 1), {Source::M1, Source::M2, Source::M2, Source::M1, Source::M2}};
  CHECK(power_fraction({false, true, true, false, true}, d) == 1.0);
  CHECK(power_fraction({true, true, false, false, false}, d) == doctest::Approx(1.0 / 3.0));
  CHECK(power_count({true, true, false, true, false}, d) == 1);
  Dataset clean{Vector::Zero(2), Matrix::Ones(2, 1), {Source::M1, Source::M1}};
  CHECK_THROWS_AS(power_fraction({false, false}, clean), DomainError);

  const auto none = size_estimate({false, false, false, false});
  CHECK(none.size == 0.0);
  CHECK(none.se == 0.0);
  const auto some = size_estimate({true, false, false, false});
  CHECK(some.size == 0.25);
  CHECK(some.se == doctest::Approx(std::sqrt(0.25 * 0.75 / 4)));
  CHECK(some.replicates == 4);
}
