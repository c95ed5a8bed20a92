#include "robreg/estimators.hpp"
#include "robreg/forward_search.hpp"
#include "robreg/linalg.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace robreg;

namespace {

FsConfig quick_config(std::uint64_t seed = 1) {
  FsConfig cfg;
  cfg.envelope_sims = 1000;
  cfg.rng = RngStream(seed, 0);
  return cfg;
}

Dataset clean(Index n, Index p, std::uint64_t seed, double sigma = 1.0) {
  RngStream rng(seed, 9);
  Matrix X(n, p);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Index j = 1; j < p; ++j) X(i, j) = rng.uniform(0.0, 10.0);
    y(i) = 1.0 + 2.0 * X.rightCols(p - 1).row(i).sum() + sigma * rng.normal();
  }
  return {y, X};
}

}  // namespace

TEST_CASE("deletion residual") {
  Dataset d = clean(12, 2, 3);
  IndexSet sub{0, 1, 2, 3, 4, 5, 6};
  // Row 11 copies row 0 with the response moved onto the subset fit.
  d.X.row(11) = d.X.row(0);
  FitResult fit = ols_fit_rows(d, sub);
  d.y(11) = d.X.row(11).dot(fit.beta_hat);
  fit = ols_fit_rows(d, sub);
  CHECK(std::abs(deletion_residual(d, fit, 11)) < 1e-12);

  const Matrix Xs = gather_rows(d.X, sub);
  const Vector x = d.X.row(9).transpose();
  const double h = x.dot((Xs.transpose() * Xs).inverse() * x);
  const double e = d.y(9) - x.dot(fit.beta_hat);
  CHECK(deletion_residual(d, fit, 9) == doctest::Approx(e / (fit.sigma_hat * std::sqrt(1 + h))));
  CHECK_THROWS_AS(deletion_residual(d, fit, 0), DomainError);
}

TEST_CASE("deletion residuals of a fixed subset follow Student t") {
  // For a subset chosen independently of the responses the deletion residual
  // of an outside row is exactly t with m - p degrees of freedom.
  const Index m = 15, p = 3;
  std::vector<double> draws;
  RngStream rng(4, 4);
  IndexSet sub(m);
  for (Index i = 0; i < m; ++i) sub[static_cast<std::size_t>(i)] = i;
  for (int rep = 0; rep < 2500; ++rep) {
    Dataset d = clean(m + 4, p, 1000 + static_cast<std::uint64_t>(rep), rep % 2 ? 1.0 : 5.0);
    const FitResult fit = ols_fit_rows(d, sub);
    for (Index r = m; r < m + 4; ++r) draws.push_back(deletion_residual(d, fit, r));
  }
  std::sort(draws.begin(), draws.end());
  const boost::math::students_t_distribution<double> t(static_cast<double>(m - p));
  double ks = 0.0;
  const double N = static_cast<double>(draws.size());
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const double F = boost::math::cdf(t, draws[k]);
    ks = std::max({ks, std::abs(F - static_cast<double>(k) / N), std::abs(F - static_cast<double>(k + 1) / N)});
  }
  CHECK(ks < 0.05);
}

TEST_CASE("search steps agree with the public step function") {
  const Dataset d = clean(40, 3, 5);
  FsConfig cfg = quick_config();
  cfg.keep_subsets = true;
  const auto [fit, traj] = fs_fit(d, cfg);
  REQUIRE(traj.subsets.size() == static_cast<std::size_t>(40 - traj.m0 + 1));
  for (std::size_t k = 0; k + 1 < traj.subsets.size(); ++k) {
    CHECK(static_cast<Index>(traj.subsets[k].size()) == traj.m0 + static_cast<Index>(k));
    CHECK(fs_step(d, traj.subsets[k]) == traj.subsets[k + 1]);
    // Entry and exit events reconcile consecutive subsets.
    CHECK(traj.entered[k].size() == traj.left[k].size() + 1);
  }
  CHECK(fit.flagged_count() == 0);
  CHECK((fit.beta_hat - ols_fit(d).beta_hat).norm() == 0.0);
  CHECK(fit.sigma_hat == ols_fit(d).sigma_hat);
}

TEST_CASE("a single gross outlier enters last and is flagged") {
  Dataset d = clean(50, 2, 6);
  d.y(17) += 60.0;
  const auto [fit, traj] = fs_fit(d, quick_config());
  CHECK(traj.entered.back() == IndexSet{17});
  CHECK(traj.m_signal >= 0);
  CHECK(fit.flagged_count() == 1);
  CHECK(fit.outlier_flags[17]);
  CHECK(fit.diagnostics.at("m_star") == 49.0);
}

TEST_CASE("rows can leave the subset") {
  // Two crossing lines: the search settles on one and must swap rows when
  // the fitted line is pulled across the intersection.
  RngStream rng(8, 8);
  const Index n = 60;
  Matrix X(n, 2);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.uniform(0.0, 10.0);
    y(i) = (i < 36 ? X(i, 1) : 10.0 - X(i, 1)) + 0.3 * rng.normal();
  }
  const auto [fit, traj] = fs_fit(Dataset{y, X}, quick_config());
  const bool interchange = std::any_of(traj.left.begin(), traj.left.end(), [](const IndexSet& s) { return !s.empty(); });
  CHECK(interchange);
  CHECK(fit.flagged_count() > 0);
}

TEST_CASE("trajectory is invariant to response scale and shift") {
  const Dataset d = clean(45, 3, 10);
  const auto [f1, t1] = fs_fit(d, quick_config(4));
  Vector g(3);
  g << 2.0, -1.0, 0.25;
  const auto [f2, t2] = fs_fit(Dataset{-4.0 * d.y + d.X * g, d.X}, quick_config(4));
  REQUIRE(t1.steps() == t2.steps());
  for (Index k = 0; k < t1.steps(); ++k)
    CHECK(t2.min_del_res[static_cast<std::size_t>(k)] ==
          doctest::Approx(t1.min_del_res[static_cast<std::size_t>(k)]).epsilon(1e-9));
  CHECK((f2.beta_hat - (-4.0 * f1.beta_hat + g)).norm() < 1e-8 * (1 + f2.beta_hat.norm()));
}

TEST_CASE("envelopes") {
  FsConfig cfg = quick_config();
  const auto e50 = fs_envelopes(50, 2, cfg);
  const auto e100 = fs_envelopes(100, 2, cfg);
  const auto e200 = fs_envelopes(200, 2, cfg);
  for (double v : e50->q01) CHECK(v >= 0.0);
  for (std::size_t k = 0; k < e50->q01.size(); ++k) CHECK(e50->q01[k] <= e50->q99[k]);
  // The last steps monitor the most extreme of ever more observations.
  CHECK(e100->q50.back() > e50->q50.back());
  CHECK(e200->q50.back() > e100->q50.back());
  CHECK(e200->q95.back() > e50->q95.back());
  // Order-statistic approximation tracks the simulated median once the
  // subset holds a quarter of the data.
  for (Index m = 13; m < 50; ++m) {
    const double sim = e50->q50[static_cast<std::size_t>(m - e50->m_first)];
    CHECK(std::abs(fs_envelope_approx(50, 2, m, 0.5) / sim - 1.0) < 0.10);
  }
  const auto th = e100->thresholds(0.01, 0.2);
  CHECK(th.late < th.early);
  cfg.envelope_sims = 150;
  CHECK_THROWS_AS(fs_envelopes(50, 2, cfg), DomainError);
}

TEST_CASE("envelope cache files round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "robreg_env_test";
  std::filesystem::remove_all(dir);
  FsConfig cfg = quick_config();
  cfg.envelope_sims = 300;
  cfg.envelope_seed = 77;
  cfg.cache_dir = dir.string();
  cfg.envelope_source = EnvelopeSource::Stored;
  CHECK_THROWS_AS(fs_envelopes(30, 2, cfg), DomainError);
  cfg.envelope_source = EnvelopeSource::Simulated;
  const auto made = fs_envelopes(30, 2, cfg);
  fs_clear_envelope_cache();
  cfg.envelope_source = EnvelopeSource::Stored;
  const auto loaded = fs_envelopes(30, 2, cfg);
  CHECK(loaded->q99 == made->q99);
  CHECK(loaded->late_max == made->late_max);
  std::filesystem::remove_all(dir);
}

TEST_CASE("duplicate collapse") {
  Dataset d = clean(20, 2, 12);
  for (Index i = 10; i < 14; ++i) {
    d.y(i) = d.y(3);
    d.X.row(i) = d.X.row(3);
  }
  SUBCASE("no duplicates: unchanged") {
    const IndexSet sub{0, 1, 2, 4};
    const auto dc = handle_duplicate_collapse(d, sub);
    CHECK(dc.subset == sub);
    CHECK(dc.deferred.empty());
  }
  SUBCASE("one group") {
    const auto dc = handle_duplicate_collapse(d, IndexSet{0, 3, 10, 11});
    CHECK(dc.subset == IndexSet{0, 3});
    CHECK(dc.deferred == IndexSet{10, 11, 12, 13});
  }
  SUBCASE("two groups") {
    d.y(15) = d.y(5);
    d.X.row(15) = d.X.row(5);
    const auto dc = handle_duplicate_collapse(d, IndexSet{3, 5, 12, 15});
    CHECK(dc.subset == IndexSet{3, 5});
    CHECK(dc.deferred == IndexSet{10, 11, 12, 13, 15});
  }
}

TEST_CASE("thirty identical rows do not break the search") {
  RngStream rng(13, 13);
  const double sd = 0.5 / 1.959963984540054;
  for (double x0 : {-3.0, -1.0, 0.5, 2.0, 3.0})
    for (double y0 : {-1.0, 1.0}) {
      Matrix X(130, 2);
      Vector y(130);
      for (Index i = 0; i < 130; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = i < 100 ? rng.uniform() : x0;
        y(i) = i < 100 ? sd * rng.normal() : y0;
      }
      const auto [fit, traj] = fs_fit(Dataset{y, X}, quick_config(7));
      CHECK(std::abs(fit.beta_hat(1)) < 0.5);
      CHECK(std::abs(fit.beta_hat(0)) < 0.3);
    }
  // Force a collapse: the search starts inside the atom of copies.
  Matrix X(40, 2);
  Vector y(40);
  for (Index i = 0; i < 40; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = i < 25 ? rng.uniform() : 3.0;
    y(i) = i < 25 ? 0.1 * rng.normal() : 2.0;
  }
  FsConfig cfg = quick_config(9);
  cfg.m0 = 2;
  const auto [fit, traj] = fs_fit(Dataset{y, X}, cfg);
  CHECK(fit.diagnostics.at("collapses") >= 1.0);
  CHECK(traj.deferred.size() >= 13);
  CHECK(fit.beta_hat.allFinite());
}

TEST_CASE("trajectory CSV") {
  const Dataset d = clean(30, 2, 14);
  const auto [fit, traj] = fs_fit(d, quick_config());
  const auto path = (std::filesystem::temp_directory_path() / "robreg_traj.csv").string();
  write_trajectory_csv(traj, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "m,min_del_res,env_lo,env_hi,entered,left");
  Index lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 30 - traj.m0);
  std::filesystem::remove(path);
}

TEST_CASE("configuration validation") {
  FsConfig cfg;
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = FsConfig{};
  cfg.early_share = 1.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}
