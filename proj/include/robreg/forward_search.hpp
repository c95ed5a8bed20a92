#pragma once

#include "robreg/core.hpp"
#include "robreg/rng.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>

namespace robreg {

enum class EnvelopeSource : unsigned char {
  Simulated,  // simulate when not cached, then cache
  Stored,     // must already be in the cache directory
};

struct FsConfig {
  double alpha = 0.01;
  std::optional<Index> m0;  // default p
  Index init_subsets = 500;
  EnvelopeSource envelope_source = EnvelopeSource::Simulated;
  Index envelope_sims = 4000;
  std::uint64_t envelope_seed = 0x5eed'f0a5'd0c5ULL;
  /// Share of the null signal rate spent on the first half of the search.
  double early_share = 0.2;
  std::string cache_dir;  // empty: in-memory cache only
  unsigned threads = 0;   // envelope simulation workers
  bool keep_subsets = false;
  RngStream rng{};

  void validate() const;
};

/// Null distribution of the minimum deletion residual for one (n, p), from
/// simulated clean searches with standard normal responses and carriers.
/// Per-step vectors are indexed by m - m_first.
struct FsEnvelope {
  Index n = 0, p = 0, sims = 0;
  Index m_first = 0;     // first monitored step, p + 1
  Index late_start = 0;  // floor(n/2)
  std::vector<double> q01, q50, q95, q99;
  /// Per simulated search: largest standardized exceedance in the late and
  /// early parts of the search.
  std::vector<double> late_max, early_max;

  double standardize(Index m, double v) const;

  struct Thresholds {
    double early, late;
  };
  /// Thresholds on the standardized statistic such that a null search
  /// signals with probability alpha, `early_share` of it in the early part.
  Thresholds thresholds(double alpha, double early_share) const;
};

struct FsTrajectory {
  Index m_first = 0;
  std::vector<double> min_del_res;  // steps m_first .. n-1
  std::vector<IndexSet> entered, left;  // per step m0 .. n-1: rows joining/leaving to form m+1
  Index m0 = 0;
  std::vector<IndexSet> subsets;  // per step m0 .. n, when requested
  std::vector<double> env_lo, env_hi;
  Index m_signal = -1;  // -1 when no signal
  Index m_star = 0;
  IndexSet deferred;    // rows held back by duplicate collapse
  std::map<Index, IndexSet> collapsed;  // subset fitted at m after a collapse there

  Index steps() const { return static_cast<Index>(min_del_res.size()); }
};

/// e_i / (s sqrt(1 + h_i)) for a row outside the subset of `subset_fit`
/// (an ols_fit_rows result: unit weights mark the subset).
double deletion_residual(const Dataset& data, const FitResult& subset_fit, Index row);

/// OLS on `current` and the m+1 rows with smallest squared residuals.
IndexSet fs_step(const Dataset& data, const IndexSet& current);

struct DuplicateCollapse {
  IndexSet subset;    // input subset without the deferred copies
  IndexSet deferred;  // rows (in or out of the subset) held back to the end
};

/// Groups of identical (y, x) rows with two or more members in `subset` are
/// reduced to their lowest-index member; every other copy in the data is
/// deferred. Without duplicates the subset is returned unchanged.
DuplicateCollapse handle_duplicate_collapse(const Dataset& data, const IndexSet& subset);

/// Cached null envelopes; simulated on first use.
std::shared_ptr<const FsEnvelope> fs_envelopes(Index n, Index p, const FsConfig& cfg);

/// Drops the in-memory envelope cache (files are kept).
void fs_clear_envelope_cache();

/// Order-statistic t approximation to the gamma quantile of the minimum
/// deletion residual at step m of a clean search of n observations.
double fs_envelope_approx(Index n, Index p, Index m, double gamma);

std::pair<FitResult, FsTrajectory> fs_fit(const Dataset& data, const FsConfig& cfg = {});

/// Trajectory CSV: m,min_del_res,env_lo,env_hi,entered,left.
void write_trajectory_csv(const FsTrajectory& traj, const std::string& path);

}  // namespace robreg
