#include "robreg/estimators.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace robreg {

double consistency_factor(double frac, Index dim) {
  if (!(frac >= 0.5 && frac <= 1.0)) throw DomainError("consistency_factor: frac outside [0.5, 1]");
  if (dim < 1) throw DomainError("consistency_factor: dim must be positive");
  if (frac == 1.0) return 1.0;
  const boost::math::chi_squared_distribution<double> chi_d(static_cast<double>(dim));
  const boost::math::chi_squared_distribution<double> chi_d2(static_cast<double>(dim + 2));
  const double q = boost::math::quantile(chi_d, frac);
  return std::sqrt(frac / boost::math::cdf(chi_d2, q));
}

namespace {

// Fitted by tools/calibrate_lts: median of the consistent raw LTS scale on
// clean Gaussian data is 1 - a / n^b, per number of coefficients p (intercept
// included). Index 0 is p = 1. Grid n = 20..200, 1000 replicates each.
struct CorrectionCurve {
  double a;
  double b;
};

constexpr std::array<CorrectionCurve, 12> kLtsCurves{{
    {1.471443, 0.765479},
    {3.249535, 0.772052},
    {3.438261, 0.711480},
    {4.396618, 0.700029},
    {4.468363, 0.671127},
    {5.163334, 0.665249},
    {4.429034, 0.607133},
    {5.243065, 0.617393},
    {4.817358, 0.585286},
    {5.488920, 0.596020},
    {4.658170, 0.548534},
    {5.179200, 0.557193},
}};

}  // namespace

double small_sample_correction(Index n, Index p, double frac) {
  if (n <= p) throw DomainError("small_sample_correction: need n > p");
  if (!(frac >= 0.5 && frac <= 1.0)) throw DomainError("small_sample_correction: frac outside [0.5, 1]");
  const auto& curve = kLtsCurves[static_cast<std::size_t>(std::clamp<Index>(p, 1, kLtsCurves.size()) - 1)];
  const double f_half = 1.0 - curve.a / std::pow(static_cast<double>(n), curve.b);
  // Linear in frac between the half-sample curve and 1 at no trimming.
  const double f = f_half + (1.0 - f_half) * (frac - 0.5) / 0.5;
  if (!(f > 0.05)) return 1.0 / 0.05;
  return 1.0 / f;
}

}  // namespace robreg
