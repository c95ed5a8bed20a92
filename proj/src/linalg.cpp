#include "robreg/linalg.hpp"

#include <cmath>
#include <limits>

namespace robreg {

namespace {

Index numerical_rank(const Eigen::ColPivHouseholderQR<Matrix>& qr) {
  const Index k = std::min(qr.rows(), qr.cols());
  if (k == 0) return 0;
  const auto& R = qr.matrixQR();
  const double top = std::abs(R(0, 0));
  if (!(top > 0.0) || !std::isfinite(top)) return 0;
  Index r = 0;
  for (Index i = 0; i < k; ++i) {
    if (std::abs(R(i, i)) / top < kSingularityThreshold) break;
    ++r;
  }
  return r;
}

}  // namespace

LeastSquaresSolver::LeastSquaresSolver(const Eigen::Ref<const Matrix>& X) : qr_(X) {
  rank_ = numerical_rank(qr_);
  if (rank_ < X.cols()) throw SingularDesignError(rank_, X.cols());
}

Vector LeastSquaresSolver::solve(const Eigen::Ref<const Vector>& y) const { return qr_.solve(y); }

double LeastSquaresSolver::leverage(const Eigen::Ref<const Vector>& x) const {
  const Index p = qr_.cols();
  Vector px = qr_.colsPermutation().transpose() * x;
  Vector z = qr_.matrixQR().topLeftCorner(p, p).transpose().triangularView<Eigen::Lower>().solve(px);
  return z.squaredNorm();
}

bool try_least_squares(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                       Vector& beta) {
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (numerical_rank(qr) < X.cols()) return false;
  beta = qr.solve(y);
  return true;
}

FitResult ols_fit(const Dataset& data) {
  const LeastSquaresSolver ls(data.X);
  FitResult fit;
  fit.method = Method::OLS;
  fit.beta_hat = ls.solve(data.y);
  const double rss = fit.residuals(data).squaredNorm();
  const Index dof = data.n() - data.p();
  fit.sigma_hat = dof > 0 ? std::sqrt(rss / static_cast<double>(dof)) : 0.0;
  fit.outlier_flags.assign(static_cast<std::size_t>(data.n()), false);
  fit.weights = Vector::Ones(data.n());
  fit.diagnostics["rss"] = rss;
  return fit;
}

FitResult ols_fit_rows(const Dataset& data, const IndexSet& idx) {
  const Matrix Xs = gather_rows(data.X, idx);
  const Vector ys = gather(data.y, idx);
  const LeastSquaresSolver ls(Xs);
  FitResult fit;
  fit.method = Method::OLS;
  fit.beta_hat = ls.solve(ys);
  const double rss = (ys - Xs * fit.beta_hat).squaredNorm();
  const auto m = static_cast<Index>(idx.size());
  fit.sigma_hat = m > data.p() ? std::sqrt(rss / static_cast<double>(m - data.p())) : 0.0;
  fit.outlier_flags.assign(static_cast<std::size_t>(data.n()), true);
  fit.weights = Vector::Zero(data.n());
  for (auto i : idx) {
    fit.outlier_flags[static_cast<std::size_t>(i)] = false;
    fit.weights(i) = 1.0;
  }
  fit.diagnostics["rss"] = rss;
  return fit;
}

Vector wls_solve(const Dataset& data, const Eigen::Ref<const Vector>& weights) {
  const Vector sw = weights.cwiseMax(0.0).cwiseSqrt();
  const Matrix Xw = sw.asDiagonal() * data.X;
  const Vector yw = sw.cwiseProduct(data.y);
  return LeastSquaresSolver(Xw).solve(yw);
}

double hat_diagonal(const Eigen::Ref<const Matrix>& X_subset, const Eigen::Ref<const Vector>& x_row) {
  return LeastSquaresSolver(X_subset).leverage(x_row);
}

Matrix gather_rows(const Matrix& X, const IndexSet& idx) {
  Matrix out(static_cast<Index>(idx.size()), X.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = X.row(idx[k]);
  return out;
}

Vector gather(const Vector& v, const IndexSet& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Index>(k)) = v(idx[k]);
  return out;
}

QrWorkspace::QrWorkspace(Index max_rows, Index cols)
    : ld_(max_rows),
      p_(cols),
      a_(static_cast<std::size_t>(max_rows * (cols + 1)), 0.0),
      diag_(static_cast<std::size_t>(cols), 0.0),
      z_(static_cast<std::size_t>(cols), 0.0) {}

void QrWorkspace::load(const Dataset& data, const IndexSet& idx) {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Index i = idx[k];
    for (Index j = 0; j < p_; ++j) a_[static_cast<std::size_t>(j * ld_) + k] = data.X(i, j);
    a_[static_cast<std::size_t>(p_ * ld_) + k] = data.y(i);
  }
}

bool QrWorkspace::solve(Index m, Vector& beta) {
  if (m < p_) return false;
  for (Index k = 0; k < p_; ++k) {
    double* v = &a_[static_cast<std::size_t>(k * ld_)];
    double norm2 = 0.0;
    for (Index i = k; i < m; ++i) norm2 += v[i] * v[i];
    const double norm = std::sqrt(norm2);
    if (!(norm > 0.0) || !std::isfinite(norm)) return false;
    const double alpha = v[k] >= 0.0 ? -norm : norm;
    const double vtv = 2.0 * (norm2 - alpha * v[k]);
    v[k] -= alpha;
    diag_[static_cast<std::size_t>(k)] = alpha;
    const double* __restrict vk = v + k;
    const Index len = m - k;
    for (Index j = k + 1; j <= p_; ++j) {
      double* __restrict col = &a_[static_cast<std::size_t>(j * ld_ + k)];
      double d0 = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
      Index i = 0;
      for (; i + 4 <= len; i += 4) {
        d0 += vk[i] * col[i];
        d1 += vk[i + 1] * col[i + 1];
        d2 += vk[i + 2] * col[i + 2];
        d3 += vk[i + 3] * col[i + 3];
      }
      for (; i < len; ++i) d0 += vk[i] * col[i];
      const double dot = (d0 + d1) + (d2 + d3);
      const double f = 2.0 * dot / vtv;
      for (i = 0; i < len; ++i) col[i] -= f * vk[i];
    }
  }
  double big = 0.0, small = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < p_; ++k) {
    const double d = std::abs(diag_[static_cast<std::size_t>(k)]);
    big = std::max(big, d);
    small = std::min(small, d);
  }
  if (small / big < kSingularityThreshold) return false;
  beta.resize(p_);
  for (Index k = p_ - 1; k >= 0; --k) {
    double acc = at(k, p_);
    for (Index j = k + 1; j < p_; ++j) acc -= at(k, j) * beta(j);
    beta(k) = acc / diag_[static_cast<std::size_t>(k)];
  }
  double rss = 0.0;
  for (Index i = p_; i < m; ++i) rss += at(i, p_) * at(i, p_);
  rss_ = rss;
  return true;
}

bool QrWorkspace::solve(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                        Vector& beta) {
  const Index m = X.rows();
  for (Index k = 0; k < m; ++k) set_row(k, X.row(k), y(k));
  return solve(m, beta);
}

}  // namespace robreg
