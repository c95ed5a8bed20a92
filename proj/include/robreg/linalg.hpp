#pragma once

#include "robreg/core.hpp"

namespace robreg {

/// Reciprocal-condition threshold below which a design is treated as singular.
inline constexpr double kSingularityThreshold = 1e-12;

/// Column-pivoted Householder QR of a design matrix. Construction fails with
/// SingularDesignError when the estimated reciprocal condition |R_pp|/|R_11|
/// falls below kSingularityThreshold.
class LeastSquaresSolver {
 public:
  explicit LeastSquaresSolver(const Eigen::Ref<const Matrix>& X);

  Vector solve(const Eigen::Ref<const Vector>& y) const;
  /// x' (X'X)^{-1} x via a triangular solve with R.
  double leverage(const Eigen::Ref<const Vector>& x) const;
  Index rank() const noexcept { return rank_; }
  Index cols() const noexcept { return qr_.cols(); }

 private:
  Eigen::ColPivHouseholderQR<Matrix> qr_;
  Index rank_ = 0;
};

/// Non-throwing variant: returns false when X is singular.
bool try_least_squares(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                       Vector& beta);

/// Ordinary least squares on the whole dataset. sigma_hat^2 = RSS/(n-p), and 0
/// for a saturated fit.
FitResult ols_fit(const Dataset& data);

/// OLS restricted to rows `idx`; flags and zero weights mark the other rows.
FitResult ols_fit_rows(const Dataset& data, const IndexSet& idx);

/// Weighted least squares with nonnegative weights.
Vector wls_solve(const Dataset& data, const Eigen::Ref<const Vector>& weights);

/// Leverage of `x_row` with respect to the design `X_subset`.
double hat_diagonal(const Eigen::Ref<const Matrix>& X_subset, const Eigen::Ref<const Vector>& x_row);

/// Gathers rows of a matrix / vector.
Matrix gather_rows(const Matrix& X, const IndexSet& idx);
Vector gather(const Vector& v, const IndexSet& idx);

/// Householder QR of an augmented least-squares problem [X | y] held in a
/// reusable column-major buffer, for repeated small solves (elemental
/// subsets, concentration steps, IRWLS, forward-search steps). Rows are loaded
/// with set_row(); solve() factors the first `rows` rows in place.
class QrWorkspace {
 public:
  QrWorkspace(Index max_rows, Index cols);

  Index cols() const noexcept { return p_; }
  Index max_rows() const noexcept { return ld_; }

  template <class Row>
  void set_row(Index k, const Row& x, double y, double scale = 1.0) {
    for (Index j = 0; j < p_; ++j) a_[static_cast<std::size_t>(j * ld_ + k)] = scale * x(j);
    a_[static_cast<std::size_t>(p_ * ld_ + k)] = scale * y;
  }
  /// Loads rows `idx` of a dataset (unit weights).
  void load(const Dataset& data, const IndexSet& idx);

  /// Factors the loaded rows and solves for beta. False when singular to
  /// kSingularityThreshold; the factor is then unusable.
  bool solve(Index rows, Vector& beta);
  /// Residual sum of squares of the last solve.
  double rss() const noexcept { return rss_; }
  /// x' (X'X)^{-1} x using the factor of the last successful solve.
  double leverage(const Eigen::Ref<const Vector>& x) const { return leverage_of(x); }
  /// As leverage(), for any indexable row expression (no copy of strided rows).
  template <class Row>
  double leverage_of(const Row& x) const {
    // Solve R' z = x by forward substitution.
    double acc2 = 0.0;
    double* z = z_.data();
    for (Index k = 0; k < p_; ++k) {
      double acc = x(k);
      for (Index j = 0; j < k; ++j) acc -= at(j, k) * z[j];
      z[k] = acc / diag_[static_cast<std::size_t>(k)];
      acc2 += z[k] * z[k];
    }
    return acc2;
  }

  /// Convenience: copy X and y (same row count) and solve.
  bool solve(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, Vector& beta);

 private:
  double& at(Index i, Index j) { return a_[static_cast<std::size_t>(j * ld_ + i)]; }
  double at(Index i, Index j) const { return a_[static_cast<std::size_t>(j * ld_ + i)]; }

  Index ld_, p_;
  std::vector<double> a_;
  std::vector<double> diag_;
  mutable std::vector<double> z_;
  double rss_ = 0.0;
};

}  // namespace robreg
