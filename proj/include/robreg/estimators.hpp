#pragma once

#include "robreg/biweight.hpp"
#include "robreg/core.hpp"
#include "robreg/rng.hpp"

#include <optional>

namespace robreg {

struct SubsetConfig {
  Index n_elemental = 1000;  // random p-subsets (all of them when fewer exist)
  Index n_refine = 2;        // concentration / IRWLS steps on every candidate
  Index n_best = 10;         // candidates refined to convergence
  RngStream rng{};

  void validate() const;
};

struct LtsConfig {
  std::optional<Index> h;  // default: floor(n/2) + floor((p+1)/2)
  SubsetConfig subset{};
  std::optional<double> reweight_alpha_star;

  Index trim_size(Index n, Index p) const;
};

/// floor(n/2) + floor((p+1)/2).
Index default_lts_h(Index n, Index p);

/// Multiplier making the root mean of the smallest `frac` share of squared
/// residuals consistent for sigma under normality. `dim` is the dimension of
/// the elliptical truncation (1 for regression residuals).
double consistency_factor(double frac, Index dim = 1);

/// Finite-sample multiplier for the raw LTS scale at trimming fraction `frac`.
double small_sample_correction(Index n, Index p, double frac = 0.5);

/// Visits elemental p-subsets: every subset (lexicographic order) when there
/// are at most `limit` of them, otherwise `limit` random ones.
class ElementalSubsets {
 public:
  ElementalSubsets(Index n, Index p, Index limit, RngStream rng);
  bool exhaustive() const noexcept { return exhaustive_; }
  Index count() const noexcept { return count_; }
  /// Fills `out` with the next subset; returns false when done.
  bool next(IndexSet& out);

 private:
  Index n_, p_, count_, produced_ = 0;
  bool exhaustive_;
  RngStream rng_;
  IndexSet scratch_, combo_;
};

/// Row indices of the `h` smallest entries of `values`, ties broken by row
/// index, returned in ascending row order.
IndexSet smallest_rows(const Vector& values, Index h);
/// As above, writing into `out` (no allocation once `out` has capacity n).
void smallest_rows(const Vector& values, Index h, IndexSet& out);

FitResult lts_fit(const Dataset& data, const LtsConfig& cfg = {});

/// Hard-trimmed reweighting of an LTS fit: rows whose |r|/sigma exceeds the
/// Bonferroni cutoff get weight 0 and OLS is refitted on the rest.
FitResult lts_reweight(const Dataset& data, const FitResult& base, const TestConfig& test);

FitResult s_estimate(const Dataset& data, const BiweightTuning& tuning = tuning_from_bdp(0.5),
                     const SubsetConfig& cfg = {});

FitResult mm_estimate(const Dataset& data, const FitResult& s_fit, double eff = 0.85);

/// One IRWLS step of the MM objective at fixed scale.
Vector mm_irwls_step(const Dataset& data, const Vector& beta, double sigma, double c);

/// sum rho_c(r_i / sigma) for the coefficient vector `beta`.
double m_objective(const Dataset& data, const Vector& beta, double sigma, double c);

/// Bonferroni outlier test on a fit: |r_i| / sigma_hat above the two-sided
/// alpha/n normal cutoff. A zero scale flags every row with nonzero residual.
std::vector<bool> outlier_test(const Dataset& data, const FitResult& fit, const TestConfig& test);

}  // namespace robreg
