#pragma once

#include "robreg/estimators.hpp"
#include "robreg/forward_search.hpp"
#include "robreg/metrics.hpp"
#include "robreg/scenario.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace robreg {

/// Estimator settings shared by every replicate. The random streams inside
/// `subset` and `fs` are replaced per replicate.
struct MethodSettings {
  TestConfig test{};
  SubsetConfig subset{};
  FsConfig fs{};
  double s_bdp = 0.5;
  double mm_efficiency = 0.85;

  void validate() const;
};

struct MethodRun {
  FitResult fit;
  std::vector<bool> flags;           // outlier decisions at the samplewise size
  std::optional<std::string> error;  // set when the method failed
  std::shared_ptr<const FsTrajectory> trajectory;  // FS only
};

/// Fits `methods` to `data`. LTSR reuses the LTS fit and MM the S fit; a
/// failure of either base also fails its dependant. Each method draws from
/// its own substream of `rng`. Failures are reported in the run, not thrown.
std::map<Method, MethodRun> run_methods(const Dataset& data, const std::vector<Method>& methods,
                                        const MethodSettings& settings, const RngStream& rng);

/// Methods in the canonical order FS, LTS, LTSR, S, MM.
std::vector<Method> all_methods();

// Lambda experiment --------------------------------------------------------

struct LambdaExperimentConfig {
  std::string name;
  TrueModel model;
  double d = 0.0;    // displacement of the lambda = 1 centre from M1
  double mu2 = 0.0;  // every coordinate of the lambda = 0 centre
  Matrix Sigma;      // M2 covariance, response first
  Index n1 = 0;
  Index n2 = 0;
  std::vector<double> lambda_grid;
  std::vector<Method> methods = all_methods();
  Index replicates = 100;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  MethodSettings settings{};
  OverlapConfig overlap{};

  M2Spec m2_at(double lambda) const;
  void validate() const;
};

struct LambdaCell {
  double lambda = 0.0;
  Method method = Method::FS;
  std::vector<CoefSummary> coef;
  double power = 0.0;        // mean share of M2 rows flagged
  double power_se = 0.0;
  double power_count = 0.0;  // mean number of M2 rows flagged
  double bias_norm = 0.0;    // of the replicate mean, analytic I(x)
  Index replicates = 0;      // replicates retained (pairwise)
  Index failures = 0;        // replicates where this method failed
  std::vector<Vector> estimates;
};

struct LambdaResult {
  std::vector<LambdaCell> cells;  // lambda-major, then method order
  std::vector<OverlapReport> overlap;
  Index dropped = 0;  // replicate-lambda pairs dropped for all methods
  Index attempted = 0;

  const LambdaCell& cell(std::size_t lambda_index, Method m) const;
};

LambdaResult run_lambda_experiment(const LambdaExperimentConfig& cfg);

/// Overlap indices only: empirical (mean over replicates), theoretical and
/// Mahalanobis distance per lambda. Uses the same samples as the experiment.
std::vector<OverlapReport> run_overlap(const LambdaExperimentConfig& cfg);

// Point contamination grid -------------------------------------------------

struct PointGridConfig {
  std::vector<double> x0_grid;
  std::vector<double> y0_grid;
  Index n_base = 100;
  Index k = 30;
  TrueModel model = default_model();
  std::vector<Method> methods = all_methods();
  Index replicates = 50;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  MethodSettings settings{};
  OverlapConfig overlap{};

  /// Zero intercept and slope, U(0, 1) carriers, 95% of errors within 0.5.
  static TrueModel default_model();
  void validate() const;
};

struct PointGridCell {
  double x0 = 0.0, y0 = 0.0;
  Method method = Method::FS;
  std::vector<CoefSummary> coef;
  std::vector<double> mse;      // sq_bias + variance
  std::vector<double> cum_mse;  // running sum along x0 at fixed y0
  double overlap = 0.0;         // 0 or 1 for a point mass
  Index replicates = 0;
  Index failures = 0;
};

struct PointGridResult {
  std::vector<PointGridCell> cells;  // y0-major, then x0, then method
  Index dropped = 0;
  Index attempted = 0;
};

PointGridResult run_point_grid(const PointGridConfig& cfg);

// Size ---------------------------------------------------------------------

struct SizeExperimentConfig {
  std::vector<Index> n_grid;
  Index p = 6;
  std::vector<Method> methods = all_methods();
  Index replicates = 2000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  MethodSettings settings{};

  void validate() const;
};

struct SizeRow {
  Index n = 0, p = 0;
  Method method = Method::FS;
  SizeEstimate estimate;
  Index failures = 0;
};

struct SizeResult {
  std::vector<SizeRow> rows;  // n-major, then method
  Index dropped = 0;
  Index attempted = 0;
};

/// Nested design: each replicate draws max(n_grid) rows once and analyses
/// every prefix of length n in the grid.
SizeResult run_size_experiment(const SizeExperimentConfig& cfg);

// Output -------------------------------------------------------------------

/// Shortest round-trip text for a double; the CSV writers use it throughout.
std::string format_double(double v);

void write_metrics_csv(const LambdaResult& r, const std::string& path);
void write_partial_sums_csv(const LambdaResult& r, const std::string& path);
void write_power_csv(const LambdaResult& r, const std::string& path);
void write_estimates_csv(const LambdaResult& r, const std::string& path);
void write_overlap_csv(const std::vector<OverlapReport>& rows, const std::string& path);
void write_point_grid_csv(const PointGridResult& r, const std::string& path);
void write_size_csv(const SizeResult& r, const std::string& path);

}  // namespace robreg
