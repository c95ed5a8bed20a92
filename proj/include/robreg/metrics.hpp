#pragma once

#include "robreg/core.hpp"

#include <vector>

namespace robreg {

/// Second-moment matrix E[x x'] of the design (intercept included).
struct InformationMatrix {
  enum class Source : unsigned char { AnalyticUniform, Empirical };
  Matrix I;
  Source source = Source::AnalyticUniform;

  /// Independent uniform carriers on the model's region.
  static InformationMatrix analytic_uniform(const TrueModel& model);
  /// (1/n) sum x x' over the M1 rows (all rows when unlabelled).
  static InformationMatrix empirical(const Dataset& data);
};

/// {(b - beta)' I (b - beta)}^{1/2}.
double bias_norm(const Vector& beta_hat, const Vector& beta_true, const InformationMatrix& info);

/// Summary of replicate estimates of one coefficient.
struct CoefSummary {
  double mean = 0.0;
  double sq_bias = 0.0;
  double variance = 0.0;  // sample variance (n - 1)
  double mad = 0.0;       // median absolute deviation from the median, unscaled
  double se_mean = 0.0;
};

/// Per-coefficient summaries; `estimates` holds one vector per replicate.
std::vector<CoefSummary> accumulate(const std::vector<Vector>& estimates, const Vector& truth);

/// Running sum in the given order.
std::vector<double> partial_sums(const std::vector<double>& values);

/// Share of the M2 rows that are flagged.
double power_fraction(const std::vector<bool>& flags, const Dataset& data);
/// Number of flagged M2 rows.
Index power_count(const std::vector<bool>& flags, const Dataset& data);

struct SizeEstimate {
  double size = 0.0;
  double se = 0.0;
  Index replicates = 0;
};

/// Fraction of replicates with at least one flag, with its binomial SE.
SizeEstimate size_estimate(const std::vector<bool>& any_flag);

}  // namespace robreg
