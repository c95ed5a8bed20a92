// Regenerates the small-sample correction curves for the LTS scale.
//
// For each number of coefficients p (intercept plus p-1 standard normal
// carriers) and each n on a grid, simulates clean Gaussian regressions, takes
// the median of the consistency-corrected raw LTS scale, and fits
// log(1 - median) = log a - b log n by least squares.

#include "robreg/estimators.hpp"
#include "robreg/parallel.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>

#include <cmath>
#include <vector>

using namespace robreg;

int main(int argc, char** argv) {
  CLI::App app{"Calibrate the LTS small-sample correction"};
  int p_max = 12;
  int reps = 1000;
  unsigned threads = 0;
  std::uint64_t seed = 20020101;
  std::vector<int> n_grid{20, 30, 40, 60, 100, 200};
  app.add_option("--p-max", p_max);
  app.add_option("--reps", reps);
  app.add_option("--seed", seed);
  app.add_option("--threads", threads);
  app.add_option("--n", n_grid);
  CLI11_PARSE(app, argc, argv);

  for (int p = 1; p <= p_max; ++p) {
    Eigen::MatrixXd A(static_cast<Index>(n_grid.size()), 2);
    Vector b(static_cast<Index>(n_grid.size()));
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
      const Index n = n_grid[g];
      std::vector<double> scales(static_cast<std::size_t>(reps));
      parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
        RngStream rng(seed, stream_key({static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(n), r}));
        Matrix X(n, p);
        Vector y(n);
        for (Index i = 0; i < n; ++i) {
          X(i, 0) = 1.0;
          for (Index j = 1; j < p; ++j) X(i, j) = rng.normal();
          y(i) = rng.normal();
        }
        LtsConfig cfg;
        cfg.subset.rng = rng.substream(1);
        const FitResult fit = lts_fit(Dataset{y, X}, cfg);
        scales[r] = fit.diagnostics.at("raw_scale") * fit.diagnostics.at("consistency_factor");
      });
      Vector s = Eigen::Map<Vector>(scales.data(), reps);
      const double med = median(s);
      A(static_cast<Index>(g), 0) = 1.0;
      A(static_cast<Index>(g), 1) = -std::log(static_cast<double>(n));
      b(static_cast<Index>(g)) = std::log(std::max(1e-6, 1.0 - med));
      fmt::print("p={} n={} median={:.5f}\n", p, n, med);
    }
    const Vector coef = A.colPivHouseholderQr().solve(b);
    fmt::print("    {{{:.6f}, {:.6f}}},  // p = {}\n", std::exp(coef(0)), coef(1), p);
    std::fflush(stdout);
  }
  return 0;
}
