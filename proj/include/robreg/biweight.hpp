#pragma once

#include "robreg/core.hpp"

namespace robreg {

/// Tukey biweight tuning. `c` is the knot, `K` the right-hand side of the
/// M-scale equation, `bdp = 6K/c^2` the implied breakdown point and `eff` the
/// Gaussian efficiency of the location M-estimator with this `c`.
struct BiweightTuning {
  double c = 0.0;
  double K = 0.0;
  double bdp = 0.0;
  double eff = 0.0;
};

double rho_biweight(double u, double c);

struct PsiWeight {
  double psi;
  double w;
};

/// psi = d rho / du and w = psi / u (w(0) = 1); both vanish for |u| > c.
PsiWeight psi_and_weight(double u, double c);

/// d psi / du.
double psi_prime_biweight(double u, double c);

/// E rho_c(Z) for standard normal Z.
double expected_rho(double c);
/// (E psi'_c(Z))^2 / E psi_c(Z)^2 for standard normal Z.
double biweight_efficiency(double c);

/// Joint solution of E rho_c(Z) = K and K = bdp c^2/6. Cached per bdp.
BiweightTuning tuning_from_bdp(double bdp);

/// Knot giving the requested Gaussian efficiency. Cached per eff.
double tuning_from_efficiency(double eff);

/// Tuning record for a given knot (K = E rho_c, bdp and eff implied).
BiweightTuning tuning_for_c(double c);

/// M-estimate of scale: sigma with mean(rho(r/sigma)) = K. Residuals with
/// |r| <= zero_tol count as exact zeros. Returns 0 when at least (1-bdp)n
/// residuals are zero. sigma0 <= 0 selects median(|r|)/0.6745.
double mscale(const Eigen::Ref<const Vector>& residuals, const BiweightTuning& tuning,
              double sigma0 = 0.0, double zero_tol = 0.0);

/// Median of a copy of `v`.
double median(Vector v);

}  // namespace robreg
