#include "robreg/estimators.hpp"
#include "robreg/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace robreg {

namespace {

struct SCandidate {
  double scale;
  Vector beta;
  Index order;  // generation order, for deterministic ties
};

bool better(const SCandidate& a, const SCandidate& b) {
  if (a.scale != b.scale) return a.scale < b.scale;
  return a.order < b.order;
}

class SWorkspace {
 public:
  SWorkspace(const Dataset& data, const BiweightTuning& t)
      : data_(data), t_(t), r_(data.n()), qr_(data.n(), data.p()) {
    zero_tol_ = 1e-11 * (1.0 + data.y.cwiseAbs().maxCoeff());
  }

  const Vector& residuals(const Vector& beta) {
    r_ = data_.y - data_.X * beta;
    return r_;
  }

  double zero_tol() const { return zero_tol_; }

  double mean_rho(double sigma) const {
    double acc = 0.0;
    for (Index i = 0; i < r_.size(); ++i) acc += rho_biweight(r_(i) / sigma, t_.c);
    return acc / static_cast<double>(r_.size());
  }

  /// Weighted LS with biweight weights at scale sigma, from current residuals.
  bool irwls(double sigma, Vector& beta) {
    Index m = 0;
    for (Index i = 0; i < r_.size(); ++i) {
      const double w = psi_and_weight(r_(i) / sigma, t_.c).w;
      if (w > 0.0) qr_.set_row(m++, data_.X.row(i), data_.y(i), std::sqrt(w));
    }
    return qr_.solve(m, beta);
  }

  double scale(double start) const { return mscale(r_, t_, start, zero_tol_); }

 private:
  const Dataset& data_;
  BiweightTuning t_;
  Vector r_;
  QrWorkspace qr_;
  double zero_tol_;
};

}  // namespace

FitResult s_estimate(const Dataset& data, const BiweightTuning& tuning, const SubsetConfig& cfg) {
  data.validate();
  cfg.validate();
  const Index n = data.n();
  const Index p = data.p();
  SWorkspace ws(data, tuning);
  ElementalSubsets subsets(n, p, cfg.n_elemental, cfg.rng);

  std::vector<SCandidate> best;
  IndexSet elemental;
  Vector beta;
  QrWorkspace elemental_qr(p, p);
  Index singular = 0, order = 0;
  bool exact = false;

  while (subsets.next(elemental)) {
    ++order;
    elemental_qr.load(data, elemental);
    if (!elemental_qr.solve(p, beta)) {
      ++singular;
      continue;
    }
    const Vector& r0 = ws.residuals(beta);
    double sigma = median(r0.cwiseAbs()) / 0.6745;
    if (!(sigma > ws.zero_tol())) sigma = ws.scale(0.0);
    bool ok = true;
    for (Index s = 0; s < cfg.n_refine && sigma > 0.0; ++s) {
      if (!ws.irwls(sigma, beta)) {
        ok = false;
        break;
      }
      ws.residuals(beta);
      // One fixed-point step of the scale equation.
      sigma *= std::sqrt(ws.mean_rho(sigma) / tuning.K);
    }
    if (!ok) {
      ++singular;
      continue;
    }
    const bool full = static_cast<Index>(best.size()) >= cfg.n_best;
    // A candidate can only improve on the worst kept scale if it lowers the
    // mean rho below K at that scale.
    if (full && best.back().scale > 0.0 && ws.mean_rho(best.back().scale) >= tuning.K) continue;
    sigma = ws.scale(sigma);
    SCandidate cand{sigma, beta, order};
    if (!full) {
      best.push_back(std::move(cand));
      std::sort(best.begin(), best.end(), better);
    } else if (better(cand, best.back())) {
      best.back() = std::move(cand);
      std::sort(best.begin(), best.end(), better);
    }
    if (sigma == 0.0) {
      exact = true;
      break;
    }
  }
  if (best.empty())
    throw EstimationFailure("s_estimate: all " + std::to_string(subsets.count()) +
                            " elemental subsets were singular");

  // Candidates are refined to a moderate tolerance; the winner is polished
  // far enough that equivariance holds to round-off.
  auto refine = [&](SCandidate& cand, double tol, int max_it) {
    ws.residuals(cand.beta);
    double sigma = cand.scale;
    for (int it = 0; it < max_it && sigma > 0.0; ++it) {
      Vector next = cand.beta;
      if (!ws.irwls(sigma, next)) break;
      ws.residuals(next);
      const double next_sigma = ws.scale(sigma);
      if (next_sigma > sigma * (1.0 + 1e-9)) break;
      const double step = (next - cand.beta).norm() / (1e-300 + cand.beta.norm());
      cand.beta = std::move(next);
      sigma = std::min(sigma, next_sigma);
      if (step < tol) break;
    }
    cand.scale = sigma;
  };
  if (!exact) {
    for (auto& cand : best) refine(cand, 1e-9, 500);
    std::sort(best.begin(), best.end(), better);
    refine(best.front(), 1e-14, 5000);
  }
  const auto& win = *std::min_element(best.begin(), best.end(), better);

  FitResult fit;
  fit.method = Method::S;
  fit.beta_hat = win.beta;
  const Vector& r = ws.residuals(fit.beta_hat);
  fit.sigma_hat = ws.scale(win.scale);
  fit.outlier_flags.assign(static_cast<std::size_t>(n), false);
  fit.weights = Vector::Ones(n);
  if (fit.sigma_hat > 0.0)
    for (Index i = 0; i < n; ++i) fit.weights(i) = psi_and_weight(r(i) / fit.sigma_hat, tuning.c).w;
  else
    for (Index i = 0; i < n; ++i) fit.weights(i) = std::abs(r(i)) <= ws.zero_tol() ? 1.0 : 0.0;
  fit.diagnostics["c"] = tuning.c;
  fit.diagnostics["K"] = tuning.K;
  fit.diagnostics["subsets"] = static_cast<double>(subsets.count());
  fit.diagnostics["singular_subsets"] = static_cast<double>(singular);
  fit.diagnostics["exact_fit"] = fit.sigma_hat == 0.0 ? 1.0 : 0.0;
  return fit;
}

double m_objective(const Dataset& data, const Vector& beta, double sigma, double c) {
  const Vector r = data.y - data.X * beta;
  double acc = 0.0;
  for (Index i = 0; i < r.size(); ++i) acc += rho_biweight(r(i) / sigma, c);
  return acc;
}

Vector mm_irwls_step(const Dataset& data, const Vector& beta, double sigma, double c) {
  const Vector r = data.y - data.X * beta;
  Vector w(r.size());
  for (Index i = 0; i < r.size(); ++i) w(i) = psi_and_weight(r(i) / sigma, c).w;
  return wls_solve(data, w);
}

FitResult mm_estimate(const Dataset& data, const FitResult& s_fit, double eff) {
  FitResult fit = s_fit;
  fit.method = Method::MM;
  fit.outlier_flags.assign(static_cast<std::size_t>(data.n()), false);
  if (!(s_fit.sigma_hat > 0.0)) {
    fit.diagnostics["degenerate_scale"] = 1.0;
    return fit;
  }
  const double c = tuning_from_efficiency(eff);
  const double sigma = s_fit.sigma_hat;
  Vector beta = s_fit.beta_hat;
  double obj = m_objective(data, beta, sigma, c);
  int it = 0;
  for (; it < 1000; ++it) {
    Vector next;
    try {
      next = mm_irwls_step(data, beta, sigma, c);
    } catch (const SingularDesignError&) {
      break;
    }
    const double next_obj = m_objective(data, next, sigma, c);
    if (next_obj > obj * (1.0 + 1e-12)) break;
    const double step = (next - beta).norm() / (1e-300 + beta.norm());
    beta = std::move(next);
    obj = next_obj;
    if (step < 1e-13) break;
  }
  fit.beta_hat = beta;
  const Vector r = fit.residuals(data);
  for (Index i = 0; i < r.size(); ++i) fit.weights(i) = psi_and_weight(r(i) / sigma, c).w;
  fit.diagnostics["c"] = c;
  fit.diagnostics["objective"] = obj;
  fit.diagnostics["iterations"] = static_cast<double>(it);
  return fit;
}

}  // namespace robreg
