#include "robreg/scenario.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace robreg {

namespace {
const boost::math::normal_distribution<double> kStdNormal;
}

void M2Spec::validate() const {
  if (Sigma.rows() != mu.size() || Sigma.cols() != mu.size())
    throw DomainError("m2: Sigma must be square with the dimension of mu");
  if (!mu.allFinite() || !Sigma.allFinite()) throw DomainError("m2: non-finite parameters");
  const double scale = std::max(1.0, Sigma.cwiseAbs().maxCoeff());
  if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("m2: Sigma is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(Sigma, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) throw DomainError("m2: Sigma is not positive semi-definite");
}

void ContaminationSpec::validate() const {
  if (theta2_0.size() != theta2_1.size()) throw DomainError("contamination: endpoints differ in dimension");
  if (lambda_grid.empty()) throw DomainError("contamination: lambda grid is empty");
  for (double l : lambda_grid)
    if (!std::isfinite(l)) throw DomainError("contamination: non-finite lambda");
  if (n2 < 0) throw DomainError("contamination: n2 must be nonnegative");
}

Vector m1_centre(const TrueModel& model) {
  const Vector mx = model.carrier_mean();
  Vector c(mx.size() + 1);
  c(0) = model.alpha + model.beta.dot(mx);
  c.tail(mx.size()) = mx;
  return c;
}

ContaminationSpec contamination_path(const TrueModel& model, double d, double mu2,
                                     std::vector<double> lambda_grid, Index n2) {
  const Vector shifted = model.carrier_mean().array() + d;
  ContaminationSpec spec;
  spec.theta2_1.resize(shifted.size() + 1);
  spec.theta2_1(0) = model.alpha + model.beta.dot(shifted);
  spec.theta2_1.tail(shifted.size()) = shifted;
  spec.theta2_0 = Vector::Constant(shifted.size() + 1, mu2);
  spec.lambda_grid = std::move(lambda_grid);
  spec.n2 = n2;
  return spec;
}

Vector mu_of_lambda(const TrueModel& model, double d, double mu2, double lambda) {
  return contamination_path(model, d, mu2, {lambda}, 0).centre(lambda);
}

double OverlapConfig::gamma() const { return 2.0 * boost::math::cdf(boost::math::complement(kStdNormal, strip_multiplier)); }

void OverlapConfig::validate() const {
  if (!(strip_multiplier > 0.0)) throw DomainError("overlap: strip multiplier must be positive");
}

Matrix draw_carriers(const TrueModel& model, Index n, RngStream& rng) {
  Matrix x(n, model.slopes());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < model.slopes(); ++j) {
      const auto r = model.region_of(j);
      x(i, j) = rng.uniform(r.a, r.b);
    }
  return x;
}

MvnSampler::MvnSampler(const M2Spec& spec) : mu_(spec.mu) {
  spec.validate();
  Eigen::SelfAdjointEigenSolver<Matrix> es(spec.Sigma);
  L_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Vector MvnSampler::draw(RngStream& rng) const { return mu_ + L_ * rng.normal_vector(mu_.size()); }

Dataset sample_mixture(const TrueModel& model, const M2Spec& m2, Index n1, Index n2, RngStream& rng,
                       const Matrix* fixed_x) {
  model.validate();
  if (n1 < 0 || n2 < 0) throw DomainError("sample_mixture: counts must be nonnegative");
  const Index k = model.slopes();
  if (n2 > 0 && m2.dim() != k + 1) throw DomainError("sample_mixture: M2 dimension must be p");
  Matrix x1;
  if (fixed_x) {
    if (fixed_x->rows() != n1 || fixed_x->cols() != k) throw DomainError("sample_mixture: fixed carriers have the wrong shape");
    x1 = *fixed_x;
  } else {
    x1 = draw_carriers(model, n1, rng);
  }
  const Index n = n1 + n2;
  Dataset d;
  d.y.resize(n);
  d.X.resize(n, k + 1);
  d.X.col(0).setOnes();
  d.source.assign(static_cast<std::size_t>(n), Source::M1);
  for (Index i = 0; i < n1; ++i) {
    d.X.row(i).tail(k) = x1.row(i);
    d.y(i) = model.alpha + x1.row(i).dot(model.beta) + model.sigma_eps * rng.normal();
  }
  if (n2 > 0) {
    const MvnSampler mvn(m2);
    for (Index i = n1; i < n; ++i) {
      const Vector w = mvn.draw(rng);
      d.y(i) = w(0);
      d.X.row(i).tail(k) = w.tail(k).transpose();
      d.source[static_cast<std::size_t>(i)] = Source::M2;
    }
  }
  return d;
}

Dataset point_contaminate(const Dataset& data, const Vector& x0, double y0, Index k) {
  if (k < 1) throw DomainError("point_contaminate: k must be at least 1");
  if (x0.size() != data.p() - 1) throw DomainError("point_contaminate: x0 must have p - 1 entries");
  const Index n = data.n();
  Dataset out;
  out.y.resize(n + k);
  out.X.resize(n + k, data.p());
  out.y.head(n) = data.y;
  out.X.topRows(n) = data.X;
  out.source = data.has_source() ? data.source : std::vector<Source>(static_cast<std::size_t>(n), Source::M1);
  for (Index i = n; i < n + k; ++i) {
    out.y(i) = y0;
    out.X(i, 0) = 1.0;
    out.X.row(i).tail(x0.size()) = x0.transpose();
    out.source.push_back(Source::M2);
  }
  return out;
}

double empirical_overlap(const Dataset& data, const TrueModel& model, const M2Spec& m2,
                         const OverlapConfig& cfg) {
  cfg.validate();
  const Index n2 = data.count(Source::M2);
  if (n2 == 0) throw DomainError("empirical_overlap: no M2 rows, the index is undefined");
  const Index k = model.slopes();
  // Conditional mean of y given x under M2: mu_y + S_yx S_xx^+ (x - mu_x).
  const Matrix Sxx = m2.Sigma.bottomRightCorner(k, k);
  const Vector Sxy = m2.Sigma.block(1, 0, k, 1);
  const Vector coef = Sxx.completeOrthogonalDecomposition().solve(Sxy);
  const Vector mux = m2.mu.tail(k);
  const double half = cfg.strip_multiplier * model.sigma_eps;
  Index inside = 0;
  for (Index i = 0; i < data.n(); ++i) {
    if (data.source[static_cast<std::size_t>(i)] != Source::M2) continue;
    const Vector x = data.X.row(i).tail(k).transpose();
    bool in_region = true;
    for (Index j = 0; j < k && in_region; ++j) {
      const auto r = model.region_of(j);
      in_region = x(j) >= r.a && x(j) <= r.b;
    }
    if (!in_region) continue;
    const double cond = m2.mu(0) + coef.dot(x - mux);
    if (std::abs(cond - model.alpha - model.beta.dot(x)) < half) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(n2);
}

double theoretical_overlap(const TrueModel& model, const M2Spec& m2, const OverlapConfig& cfg) {
  cfg.validate();
  const Index k = model.slopes();
  if (m2.dim() != k + 1) throw DomainError("theoretical_overlap: M2 dimension must be p");
  Vector b(k + 1);
  b(0) = 1.0;
  b.tail(k) = -model.beta;
  const double centre = b.dot(m2.mu);
  const double c_lo = model.alpha - cfg.strip_multiplier * model.sigma_eps;
  const double c_hi = model.alpha + cfg.strip_multiplier * model.sigma_eps;
  const double var = b.dot(m2.Sigma * b);
  if (!(var > 1e-14 * std::max(1.0, m2.Sigma.cwiseAbs().maxCoeff()) * b.squaredNorm()))
    return centre >= c_lo && centre <= c_hi ? 1.0 : 0.0;
  const double s = std::sqrt(var);
  return boost::math::cdf(kStdNormal, (c_hi - centre) / s) - boost::math::cdf(kStdNormal, (c_lo - centre) / s);
}

double mahalanobis_sq(const Vector& mu1, const Vector& mu2, const Matrix& Sigma) {
  if (mu1.size() != mu2.size() || Sigma.rows() != mu1.size()) throw DomainError("mahalanobis: dimension mismatch");
  Eigen::LLT<Matrix> llt(Sigma);
  if (llt.info() != Eigen::Success) throw DomainError("mahalanobis: Sigma is not positive definite");
  const Vector z = llt.matrixL().solve(mu1 - mu2);
  return z.squaredNorm();
}

}  // namespace robreg
