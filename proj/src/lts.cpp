#include "robreg/estimators.hpp"
#include "robreg/linalg.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>

namespace robreg {

Index default_lts_h(Index n, Index p) { return n / 2 + (p + 1) / 2; }

Index LtsConfig::trim_size(Index n, Index p) const {
  const Index hh = h.value_or(default_lts_h(n, p));
  if (hh < p || hh > n) throw DomainError("lts: h must satisfy p <= h <= n");
  return hh;
}

namespace {

struct Candidate {
  double objective;
  IndexSet subset;
  Vector beta;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.objective != b.objective) return a.objective < b.objective;
  return a.subset < b.subset;
}

class ConcentrationSteps {
 public:
  ConcentrationSteps(const Dataset& data, Index h)
      : data_(data), h_(h), r2_(data.n()), qr_(h, data.p()) {}

  void squared_residuals(const Vector& beta) {
    r2_ = (data_.y - data_.X * beta).array().square().matrix();
  }

  /// Refit on the h rows with smallest squared residuals under `beta`.
  bool step(Vector& beta, IndexSet& subset) {
    squared_residuals(beta);
    smallest_rows(r2_, h_, subset);
    return fit(subset, beta);
  }

  bool fit(const IndexSet& subset, Vector& beta) {
    qr_.load(data_, subset);
    return qr_.solve(h_, beta);
  }

  /// Sum of the h smallest squared residuals under `beta`, with their rows.
  double objective(const Vector& beta, IndexSet& subset) {
    squared_residuals(beta);
    smallest_rows(r2_, h_, subset);
    double acc = 0.0;
    for (auto i : subset) acc += r2_(i);
    return acc;
  }

 private:
  const Dataset& data_;
  Index h_;
  Vector r2_;
  QrWorkspace qr_;
};

}  // namespace

FitResult lts_fit(const Dataset& data, const LtsConfig& cfg) {
  data.validate();
  cfg.subset.validate();
  const Index n = data.n();
  const Index p = data.p();
  const Index h = cfg.trim_size(n, p);

  ConcentrationSteps cs(data, h);
  ElementalSubsets subsets(n, p, cfg.subset.n_elemental, cfg.subset.rng);
  std::vector<Candidate> best;
  Index singular = 0;
  IndexSet elemental, H;
  Vector beta;
  QrWorkspace elemental_qr(p, p);

  while (subsets.next(elemental)) {
    elemental_qr.load(data, elemental);
    if (!elemental_qr.solve(p, beta)) {
      ++singular;
      continue;
    }
    bool ok = true;
    for (Index s = 0; s < cfg.subset.n_refine && ok; ++s) ok = cs.step(beta, H);
    if (!ok) {
      ++singular;
      continue;
    }
    Candidate cand{cs.objective(beta, H), H, beta};
    if (std::any_of(best.begin(), best.end(), [&](const Candidate& b) { return b.subset == cand.subset; }))
      continue;
    if (static_cast<Index>(best.size()) < cfg.subset.n_best) {
      best.push_back(std::move(cand));
      std::sort(best.begin(), best.end(), better);
    } else if (better(cand, best.back())) {
      best.back() = std::move(cand);
      std::sort(best.begin(), best.end(), better);
    }
  }
  if (best.empty())
    throw EstimationFailure("lts: all " + std::to_string(subsets.count()) +
                            " elemental subsets were singular");

  // Concentrate the survivors until their h-subsets stop changing.
  for (auto& cand : best) {
    for (int it = 0; it < 500; ++it) {
      Vector next = cand.beta;
      if (!cs.fit(cand.subset, next)) break;
      IndexSet next_subset;
      const double obj = cs.objective(next, next_subset);
      const bool stable = next_subset == cand.subset;
      if (obj <= cand.objective || stable) {
        cand.beta = std::move(next);
        cand.objective = std::min(obj, cand.objective);
        if (stable) break;
        cand.subset = std::move(next_subset);
      } else {
        break;
      }
    }
  }
  const auto& win = *std::min_element(best.begin(), best.end(), better);

  FitResult fit;
  fit.method = Method::LTS;
  // OLS on the winning h-subset.
  fit.beta_hat = win.beta;
  if (Vector refit; cs.fit(win.subset, refit)) fit.beta_hat = refit;
  IndexSet final_subset;
  const double rss_h = cs.objective(fit.beta_hat, final_subset);
  const double frac = static_cast<double>(h) / static_cast<double>(n);
  double raw = std::sqrt(rss_h / static_cast<double>(h));
  // An exact fit of h rows leaves round-off only.
  if (raw <= 1e-11 * (1.0 + data.y.cwiseAbs().maxCoeff())) raw = 0.0;
  const double cf = consistency_factor(frac, 1);
  const double ssc = n > p ? small_sample_correction(n, p, frac) : 1.0;
  fit.sigma_hat = cf * ssc * raw;
  fit.outlier_flags.assign(static_cast<std::size_t>(n), true);
  fit.weights = Vector::Zero(n);
  for (auto i : final_subset) {
    fit.outlier_flags[static_cast<std::size_t>(i)] = false;
    fit.weights(i) = 1.0;
  }
  fit.diagnostics["objective"] = rss_h;
  fit.diagnostics["h"] = static_cast<double>(h);
  fit.diagnostics["raw_scale"] = raw;
  fit.diagnostics["consistency_factor"] = cf;
  fit.diagnostics["small_sample_correction"] = ssc;
  fit.diagnostics["subsets"] = static_cast<double>(subsets.count());
  fit.diagnostics["singular_subsets"] = static_cast<double>(singular);
  fit.diagnostics["exhaustive_subsets"] = subsets.exhaustive() ? 1.0 : 0.0;
  return fit;
}

FitResult lts_reweight(const Dataset& data, const FitResult& base, const TestConfig& test) {
  test.validate();
  if (!(base.sigma_hat > 0.0)) throw EstimationFailure("lts_reweight: degenerate base fit with zero scale");
  const Index n = data.n();
  const Index p = data.p();
  const double z = test.cutoff(n);
  const Vector r = base.residuals(data);
  IndexSet keep;
  for (Index i = 0; i < n; ++i)
    if (std::abs(r(i)) / base.sigma_hat <= z) keep.push_back(i);
  const auto k = static_cast<Index>(keep.size());
  if (k == 0) throw EstimationFailure("lts_reweight: every row was flagged");
  if (k <= p) throw EstimationFailure("lts_reweight: too few rows retained for a refit");

  FitResult fit = ols_fit_rows(data, keep);
  fit.method = Method::LTSR;
  // The retained rows are those within +-z sigma: a normal truncated at z.
  static const boost::math::normal_distribution<double> nd;
  const double retained_mass = 2.0 * boost::math::cdf(nd, z) - 1.0;
  const double cf = consistency_factor(std::max(0.5, retained_mass), 1);
  fit.sigma_hat *= cf;
  fit.diagnostics["cutoff"] = z;
  fit.diagnostics["retained"] = static_cast<double>(k);
  fit.diagnostics["consistency_factor"] = cf;
  return fit;
}

std::vector<bool> outlier_test(const Dataset& data, const FitResult& fit, const TestConfig& test) {
  test.validate();
  const Index n = data.n();
  const double z = test.cutoff(n);
  const Vector r = fit.residuals(data);
  const double scale_tol = 1e-12 * (1.0 + data.y.cwiseAbs().maxCoeff());
  std::vector<bool> flags(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < n; ++i) {
    const double a = std::abs(r(i));
    flags[static_cast<std::size_t>(i)] =
        fit.sigma_hat > 0.0 ? a / fit.sigma_hat > z : a > scale_tol;
  }
  return flags;
}

}  // namespace robreg
