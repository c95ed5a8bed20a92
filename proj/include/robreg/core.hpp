#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace robreg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using IndexSet = std::vector<Index>;

// Errors -------------------------------------------------------------------

class SingularDesignError : public std::runtime_error {
 public:
  SingularDesignError(Index rank, Index cols)
      : std::runtime_error("singular design: rank " + std::to_string(rank) +
                           " < " + std::to_string(cols) + " columns"),
        rank_(rank) {}
  Index rank() const noexcept { return rank_; }

 private:
  Index rank_;
};

class EstimationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericSolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Domain types -------------------------------------------------------------

enum class Source : unsigned char { M1, M2 };

/// Regression sample. `X` carries an explicit all-ones first column when an
/// intercept is modelled; `source` is only filled by the simulators.
struct Dataset {
  Vector y;
  Matrix X;
  std::vector<Source> source;

  Dataset() = default;
  Dataset(Vector y_, Matrix X_, std::vector<Source> source_ = {});

  Index n() const noexcept { return y.size(); }
  Index p() const noexcept { return X.cols(); }
  bool has_source() const noexcept { return !source.empty(); }
  Index count(Source s) const;

  /// Throws DomainError when a structural invariant is violated.
  void validate() const;

  /// Rows `idx` in the given order.
  Dataset rows(const IndexSet& idx) const;
  /// First `m` rows.
  Dataset head(Index m) const;
};

/// Interval bounds of the (independent, uniform) carriers.
struct DesignRegion {
  double a = 0.0;
  double b = 1.0;
};

/// The uncontaminated regression model y = alpha + beta' x + eps.
struct TrueModel {
  double alpha = 0.0;
  Vector beta;  // slopes, length p-1
  double sigma_eps = 1.0;
  std::vector<DesignRegion> region;  // one per slope; a single entry is broadcast

  Index slopes() const noexcept { return beta.size(); }
  /// Full coefficient vector (alpha, beta).
  Vector coefficients() const;
  DesignRegion region_of(Index j) const;
  /// Mean of the carriers, (a+b)/2 per coordinate.
  Vector carrier_mean() const;
  void validate() const;
};

enum class Method : unsigned char { OLS, FS, LTS, LTSR, S, MM };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

struct FitResult {
  Vector beta_hat;
  double sigma_hat = 0.0;
  std::vector<bool> outlier_flags;
  Method method = Method::OLS;
  Vector weights;
  std::map<std::string, double> diagnostics;

  Vector residuals(const Dataset& data) const { return data.y - data.X * beta_hat; }
  Index flagged_count() const;
};

/// Outlier test configuration: samplewise size `alpha`, per-observation size
/// alpha/n applied two-sided.
struct TestConfig {
  double alpha = 0.01;

  double alpha_star(Index n) const { return alpha / static_cast<double>(n); }
  /// Two-sided standard normal cutoff at per-observation size alpha/n.
  double cutoff(Index n) const;
  void validate() const;
};

}  // namespace robreg
