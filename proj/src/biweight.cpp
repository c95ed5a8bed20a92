#include "robreg/biweight.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace robreg {

namespace {

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

double phi(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

/// 2 * integral_0^c f(z) phi(z) dz; integrands here are even.
template <class F>
double gauss_expectation(F f, double c) {
  using boost::math::quadrature::gauss_kronrod;
  auto g = [&](double z) { return f(z) * phi(z); };
  return 2.0 * gauss_kronrod<double, 61>::integrate(g, 0.0, c, 15, 1e-14);
}

double upper_tail(double c) {
  static const boost::math::normal_distribution<double> z;
  return boost::math::cdf(boost::math::complement(z, c));
}

template <class F>
double bisect(F f, double lo, double hi, double tol, const char* what) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo * fhi > 0.0) throw NumericSolverError(std::string(what) + ": root not bracketed");
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  if (hi - lo > tol) throw NumericSolverError(std::string(what) + ": bisection did not converge");
  return 0.5 * (lo + hi);
}

}  // namespace

double rho_biweight(double u, double c) {
  const double a = std::abs(u);
  if (a >= c) return c * c / 6.0;
  const double t = (u / c) * (u / c);
  return 0.5 * u * u * (1.0 - t + t * t / 3.0);
}

PsiWeight psi_and_weight(double u, double c) {
  if (std::abs(u) > c) return {0.0, 0.0};
  const double t = 1.0 - (u / c) * (u / c);
  const double w = t * t;
  return {u * w, w};
}

double psi_prime_biweight(double u, double c) {
  if (std::abs(u) > c) return 0.0;
  const double t = (u / c) * (u / c);
  return (1.0 - t) * (1.0 - 5.0 * t);
}

double expected_rho(double c) {
  return gauss_expectation([c](double z) { return rho_biweight(z, c); }, c) +
         2.0 * upper_tail(c) * c * c / 6.0;
}

double biweight_efficiency(double c) {
  const double dpsi = gauss_expectation([c](double z) { return psi_prime_biweight(z, c); }, c);
  const double psi2 = gauss_expectation(
      [c](double z) {
        const double s = psi_and_weight(z, c).psi;
        return s * s;
      },
      c);
  return dpsi * dpsi / psi2;
}

BiweightTuning tuning_for_c(double c) {
  if (!(c > 0.0)) throw DomainError("biweight: c must be positive");
  BiweightTuning t;
  t.c = c;
  t.K = expected_rho(c);
  t.bdp = 6.0 * t.K / (c * c);
  t.eff = biweight_efficiency(c);
  return t;
}

BiweightTuning tuning_from_bdp(double bdp) {
  if (!(bdp > 0.0 && bdp <= 0.5)) throw DomainError("biweight: bdp must lie in (0, 0.5]");
  static std::mutex mu;
  static std::map<double, BiweightTuning> cache;
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(bdp); it != cache.end()) return it->second;
  }
  // 6 E rho_c / c^2 decreases from 1 to 0 as c grows.
  const double c = bisect([bdp](double c) { return 6.0 * expected_rho(c) / (c * c) - bdp; },
                          1e-3, 100.0, 1e-10, "tuning_from_bdp");
  BiweightTuning t = tuning_for_c(c);
  t.bdp = bdp;
  t.K = bdp * c * c / 6.0;
  std::lock_guard lock(mu);
  cache.emplace(bdp, t);
  return t;
}

double tuning_from_efficiency(double eff) {
  if (!(eff > 0.0 && eff < 1.0)) throw DomainError("biweight: efficiency must lie in (0, 1)");
  static std::mutex mu;
  static std::map<double, double> cache;
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(eff); it != cache.end()) return it->second;
  }
  const double c = bisect([eff](double c) { return biweight_efficiency(c) - eff; }, 0.05, 100.0,
                          1e-10, "tuning_from_efficiency");
  std::lock_guard lock(mu);
  cache.emplace(eff, c);
  return c;
}

double median(Vector v) {
  const Index n = v.size();
  if (n == 0) throw DomainError("median of empty vector");
  auto* b = v.data();
  const Index mid = n / 2;
  std::nth_element(b, b + mid, b + n);
  if (n % 2 == 1) return b[mid];
  const double hi = b[mid];
  const double lo = *std::max_element(b, b + mid);
  return 0.5 * (lo + hi);
}

double mscale(const Eigen::Ref<const Vector>& residuals, const BiweightTuning& tuning,
              double sigma0, double zero_tol) {
  const Index n = residuals.size();
  if (n == 0) throw DomainError("mscale: empty residual vector");
  const double c = tuning.c;
  const double K = tuning.K;
  Vector a = residuals.cwiseAbs();
  for (Index i = 0; i < n; ++i)
    if (a(i) <= zero_tol) a(i) = 0.0;

  const auto nonzero = static_cast<double>((a.array() > 0.0).count());
  // sup over sigma of mean rho is (nonzero/n) c^2/6, attained as sigma -> 0.
  if (nonzero * c * c / 6.0 <= K * static_cast<double>(n) * (1.0 + 1e-12)) return 0.0;

  // Safeguarded Newton on t = log sigma: f(t) = mean rho(a / e^t) - K is
  // decreasing, f'(t) = -mean psi(u) u.
  auto eval = [&](double s, double& deriv) {
    double f = 0.0, d = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double u = a(i) / s;
      if (u >= c) {
        f += c * c / 6.0;
      } else {
        const double t = (u / c) * (u / c);
        f += 0.5 * u * u * (1.0 - t + t * t / 3.0);
        d += u * u * (1.0 - t) * (1.0 - t);
      }
    }
    deriv = -d / static_cast<double>(n);
    return f / static_cast<double>(n) - K;
  };

  double s = sigma0;
  if (!(s > 0.0)) s = median(a) / 0.6745;
  if (!(s > 0.0)) s = a.mean();

  double deriv = 0.0;
  double f = eval(s, deriv);
  // Bracket the root in log sigma.
  double lo = std::log(s), hi = lo;
  if (f > 0.0) {
    do {
      hi += std::log(2.0);
    } while (eval(std::exp(hi), deriv) > 0.0);
  } else {
    do {
      lo -= std::log(2.0);
    } while (eval(std::exp(lo), deriv) < 0.0);
  }
  double t = std::log(s);
  f = eval(s, deriv);
  for (int it = 0; it < 200; ++it) {
    if (f > 0.0) lo = t; else hi = t;
    double next = (deriv < 0.0) ? t - f / deriv : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool done = std::abs(next - t) < 1e-11 || hi - lo < 1e-11;
    t = next;
    f = eval(std::exp(t), deriv);
    if (done) return std::exp(t);
  }
  throw NumericSolverError("mscale: no convergence");
}

}  // namespace robreg
