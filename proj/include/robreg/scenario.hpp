#pragma once

#include "robreg/core.hpp"
#include "robreg/rng.hpp"

#include <vector>

namespace robreg {

/// Normal distribution of the contaminating population; coordinate 0 is the
/// response, the rest are the carriers (no intercept).
struct M2Spec {
  Vector mu;
  Matrix Sigma;

  Index dim() const noexcept { return mu.size(); }
  /// Throws DomainError unless Sigma is symmetric positive semi-definite.
  void validate() const;
};

/// Linear path of the contamination centre, theta_0 at lambda = 0 and
/// theta_1 at lambda = 1.
struct ContaminationSpec {
  Vector theta2_0;
  Vector theta2_1;
  std::vector<double> lambda_grid;
  Index n2 = 0;

  Vector centre(double lambda) const { return lambda * theta2_1 + (1.0 - lambda) * theta2_0; }
  void validate() const;
};

/// The path through the M1 point displaced by d (lambda = 1) and the point
/// with every coordinate mu2 (lambda = 0).
ContaminationSpec contamination_path(const TrueModel& model, double d, double mu2,
                                     std::vector<double> lambda_grid, Index n2);

/// Contamination centre at lambda for the path above.
Vector mu_of_lambda(const TrueModel& model, double d, double mu2, double lambda);

/// Centre of the uncontaminated population, (alpha + beta' mu_x, mu_x).
Vector m1_centre(const TrueModel& model);

struct OverlapConfig {
  double strip_multiplier = 2.0;  // strip is +-k sigma_eps
  /// Two-sided normal tail probability outside the strip.
  double gamma() const;
  void validate() const;
};

struct OverlapReport {
  double lambda = 0.0;
  double empirical = 0.0;
  double theoretical = 0.0;
  double mahalanobis_sq = 0.0;
};

/// n x (p-1) uniform carriers on the model's design region.
Matrix draw_carriers(const TrueModel& model, Index n, RngStream& rng);

/// Draws from N(mu, Sigma); Sigma may be singular.
class MvnSampler {
 public:
  explicit MvnSampler(const M2Spec& spec);
  Vector draw(RngStream& rng) const;

 private:
  Vector mu_;
  Matrix L_;
};

/// n1 clean rows (using `fixed_x` as their carriers when given) followed by
/// n2 rows from the contaminating normal. Design has an intercept column.
Dataset sample_mixture(const TrueModel& model, const M2Spec& m2, Index n1, Index n2, RngStream& rng,
                       const Matrix* fixed_x = nullptr);

/// Appends k identical rows (y0, 1, x0) labelled M2.
Dataset point_contaminate(const Dataset& data, const Vector& x0, double y0, Index k);

/// Share of M2 rows whose carriers lie in the design region and whose
/// conditional M2 mean lies strictly inside the strip around the true plane.
double empirical_overlap(const Dataset& data, const TrueModel& model, const M2Spec& m2,
                         const OverlapConfig& cfg);

/// Normal probability that (y, x) ~ M2 falls between the hyperplanes
/// y - beta' x = alpha +- k sigma_eps.
double theoretical_overlap(const TrueModel& model, const M2Spec& m2, const OverlapConfig& cfg);

/// (mu1 - mu2)' Sigma^{-1} (mu1 - mu2); Sigma must be positive definite.
double mahalanobis_sq(const Vector& mu1, const Vector& mu2, const Matrix& Sigma);

}  // namespace robreg
