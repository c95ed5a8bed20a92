#include "robreg/forward_search.hpp"

#include "robreg/estimators.hpp"
#include "robreg/linalg.hpp"
#include "robreg/parallel.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

#include <unistd.h>

namespace robreg {

void FsConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("fs: alpha must lie in (0, 1)");
  if (init_subsets < 1) throw DomainError("fs: init_subsets must be positive");
  if (envelope_sims < 200) throw DomainError("fs: envelope_sims below 200 is too noisy to use");
  if (!(early_share >= 0.0 && early_share < 1.0)) throw DomainError("fs: early_share must lie in [0, 1)");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Type 7 quantile of sorted data.
double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Elemental subset whose exact fit has the smallest median squared residual.
IndexSet lms_start(const Dataset& data, Index subsets_limit, const RngStream& rng) {
  const Index n = data.n();
  const Index p = data.p();
  ElementalSubsets subsets(n, p, subsets_limit, rng);
  QrWorkspace qr(p, p);
  IndexSet elemental, best;
  Vector beta;
  std::vector<double> r2(static_cast<std::size_t>(n));
  double best_crit = kInf;
  const auto mid = static_cast<std::ptrdiff_t>(n / 2);
  while (subsets.next(elemental)) {
    qr.load(data, elemental);
    if (!qr.solve(p, beta)) continue;
    for (Index i = 0; i < n; ++i) {
      const double e = data.y(i) - data.X.row(i).dot(beta);
      r2[static_cast<std::size_t>(i)] = e * e;
    }
    std::nth_element(r2.begin(), r2.begin() + mid, r2.end());
    const double crit = r2[static_cast<std::size_t>(mid)];
    if (crit < best_crit) {
      best_crit = crit;
      best = elemental;
    }
  }
  if (best.empty())
    throw EstimationFailure("fs: all " + std::to_string(subsets.count()) +
                            " elemental subsets were singular");
  return best;
}

struct SearchResult {
  std::vector<double> v;  // min deletion residual, steps p+1 .. n-1 (NaN before m0)
  std::vector<IndexSet> entered, left, subsets;
  IndexSet deferred;
  Index collapses = 0;
  std::map<Index, IndexSet> collapsed;  // subset actually fitted at m after a collapse
};

// Runs the search from `init` to n, recording the monitoring statistic and,
// optionally, the entry/exit events and subsets.
SearchResult run_search(const Dataset& data, IndexSet S, bool events, bool keep_subsets) {
  const Index n = data.n();
  const Index p = data.p();
  const Index m0 = static_cast<Index>(S.size());
  SearchResult out;
  out.v.assign(static_cast<std::size_t>(std::max<Index>(0, n - p - 1)), std::nan(""));
  if (events) {
    out.entered.resize(static_cast<std::size_t>(n - m0));
    out.left.resize(static_cast<std::size_t>(n - m0));
  }
  std::sort(S.begin(), S.end());
  if (keep_subsets) out.subsets.push_back(S);

  const double ytol = 1e-10 * (1.0 + data.y.cwiseAbs().maxCoeff());
  std::vector<char> deferred(static_cast<std::size_t>(n), 0), in(static_cast<std::size_t>(n), 0);
  Index n_deferred = 0;
  QrWorkspace qr(n, p);
  Vector beta, last_good, e(n), key(n);
  IndexSet next, step_start = S;

  for (Index m = m0; m < n;) {
    qr.load(data, S);
    const bool ok = qr.solve(m, beta);
    const double s = ok && m > p ? std::sqrt(qr.rss() / static_cast<double>(m - p)) : 0.0;
    if (!ok || (m > p && s <= ytol)) {
      DuplicateCollapse dc = handle_duplicate_collapse(data, S);
      Index fresh = 0;
      for (auto i : dc.deferred)
        if (!deferred[static_cast<std::size_t>(i)]) {
          deferred[static_cast<std::size_t>(i)] = 1;
          out.deferred.push_back(i);
          ++fresh;
        }
      if (fresh == 0) {
        if (!ok) throw SingularDesignError(std::min(m, p) - 1, p);
        throw EstimationFailure("fs: zero residual scale on a subset without duplicate rows");
      }
      n_deferred += fresh;
      ++out.collapses;
      S = dc.subset;
      qr.load(data, S);
      // What is left of the subset may be too small to fit; rank the rows by
      // the last nondegenerate fit instead.
      if (!qr.solve(static_cast<Index>(S.size()), beta)) {
        if (last_good.size() == 0) throw SingularDesignError(std::min<Index>(static_cast<Index>(S.size()), p) - 1, p);
        beta = last_good;
      }
      e = data.y - data.X * beta;
      for (Index i = 0; i < n; ++i) key(i) = deferred[static_cast<std::size_t>(i)] ? kInf : e(i) * e(i);
      if (n - n_deferred < m) throw EstimationFailure("fs: too few distinct rows to continue the search");
      smallest_rows(key, m, S);
      out.collapsed[m] = S;
      continue;
    }

    last_good = beta;
    e = data.y - data.X * beta;
    if (n_deferred > 0 && n - n_deferred < m + 1) {
      std::fill(deferred.begin(), deferred.end(), 0);
      n_deferred = 0;
    }
    for (Index i = 0; i < n; ++i) key(i) = deferred[static_cast<std::size_t>(i)] ? kInf : e(i) * e(i);

    if (m > p) {
      std::fill(in.begin(), in.end(), 0);
      for (auto i : S) in[static_cast<std::size_t>(i)] = 1;
      double vmin = kInf;
      for (Index i = 0; i < n; ++i) {
        if (in[static_cast<std::size_t>(i)] || deferred[static_cast<std::size_t>(i)]) continue;
        const double h = qr.leverage_of(data.X.row(i));
        vmin = std::min(vmin, std::abs(e(i)) / (s * std::sqrt(1.0 + h)));
      }
      out.v[static_cast<std::size_t>(m - p - 1)] = vmin;
    }

    smallest_rows(key, m + 1, next);
    if (events) {
      auto& ent = out.entered[static_cast<std::size_t>(m - m0)];
      auto& lft = out.left[static_cast<std::size_t>(m - m0)];
      std::set_difference(next.begin(), next.end(), step_start.begin(), step_start.end(), std::back_inserter(ent));
      std::set_difference(step_start.begin(), step_start.end(), next.begin(), next.end(), std::back_inserter(lft));
    }
    S.swap(next);
    step_start = S;
    if (keep_subsets) out.subsets.push_back(S);
    ++m;
  }
  return out;
}

IndexSet initial_subset(const Dataset& data, const FsConfig& cfg) {
  const Index n = data.n();
  const Index p = data.p();
  const Index m0 = cfg.m0.value_or(p);
  if (m0 < p || m0 >= n) throw DomainError("fs: m0 must satisfy p <= m0 < n");
  IndexSet S = lms_start(data, cfg.init_subsets, cfg.rng.substream(0x1a5));
  if (m0 > p) {
    Vector beta;
    QrWorkspace qr(p, p);
    qr.load(data, S);
    qr.solve(p, beta);
    const Vector r2 = (data.y - data.X * beta).array().square().matrix();
    S = smallest_rows(r2, m0);
  }
  return S;
}

// Envelope cache ------------------------------------------------------------

using EnvKey = std::tuple<Index, Index, Index, Index, std::uint64_t>;

std::mutex g_env_mutex;
std::map<EnvKey, std::shared_future<std::shared_ptr<const FsEnvelope>>> g_env_cache;

std::string cache_file(const FsConfig& cfg, Index n, Index p) {
  return (std::filesystem::path(cfg.cache_dir) /
          ("fs_envelope_n" + std::to_string(n) + "_p" + std::to_string(p) + "_s" +
           std::to_string(cfg.envelope_sims) + "_i" + std::to_string(cfg.init_subsets) + "_seed" +
           std::to_string(cfg.envelope_seed) + ".json"))
      .string();
}

constexpr int kEnvelopeFormat = 1;

std::shared_ptr<const FsEnvelope> load_envelope(const std::string& path) {
  std::ifstream in(path);
  if (!in) return nullptr;
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format").get<int>() != kEnvelopeFormat) return nullptr;
    auto env = std::make_shared<FsEnvelope>();
    env->n = j.at("n");
    env->p = j.at("p");
    env->sims = j.at("sims");
    env->m_first = j.at("m_first");
    env->late_start = j.at("late_start");
    env->q01 = j.at("q01").get<std::vector<double>>();
    env->q50 = j.at("q50").get<std::vector<double>>();
    env->q95 = j.at("q95").get<std::vector<double>>();
    env->q99 = j.at("q99").get<std::vector<double>>();
    env->late_max = j.at("late_max").get<std::vector<double>>();
    env->early_max = j.at("early_max").get<std::vector<double>>();
    return env;
  } catch (const nlohmann::json::exception&) {
    return nullptr;
  }
}

void store_envelope(const FsEnvelope& env, const std::string& path) {
  nlohmann::json j;
  j["format"] = kEnvelopeFormat;
  j["n"] = env.n;
  j["p"] = env.p;
  j["sims"] = env.sims;
  j["m_first"] = env.m_first;
  j["late_start"] = env.late_start;
  j["q01"] = env.q01;
  j["q50"] = env.q50;
  j["q95"] = env.q95;
  j["q99"] = env.q99;
  j["late_max"] = env.late_max;
  j["early_max"] = env.early_max;
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  // Write then rename so concurrent readers never see a partial file.
  const std::string tmp = path + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp);
    out << j.dump();
    if (!out) return;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) std::filesystem::remove(tmp, ec);
}

std::shared_ptr<const FsEnvelope> simulate_envelope(Index n, Index p, const FsConfig& cfg) {
  const Index steps = n - p - 1;
  if (steps < 1) throw DomainError("fs: need n > p + 1 to monitor a search");
  const auto sims = static_cast<std::size_t>(cfg.envelope_sims);
  std::vector<std::vector<double>> traj(sims);
  parallel_for(sims, cfg.threads, [&](std::size_t k) {
    RngStream rng(cfg.envelope_seed, stream_key({static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(p), k}));
    Matrix X(n, p);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      for (Index j = 1; j < p; ++j) X(i, j) = rng.normal();
      y(i) = rng.normal();
    }
    const Dataset d{y, X};
    const IndexSet init = lms_start(d, cfg.init_subsets, rng.substream(1));
    traj[k] = run_search(d, init, false, false).v;
  });

  auto env = std::make_shared<FsEnvelope>();
  env->n = n;
  env->p = p;
  env->sims = cfg.envelope_sims;
  env->m_first = p + 1;
  env->late_start = n / 2;
  std::vector<double> col(sims);
  for (Index s = 0; s < steps; ++s) {
    for (std::size_t k = 0; k < sims; ++k) col[k] = traj[k][static_cast<std::size_t>(s)];
    std::sort(col.begin(), col.end());
    env->q01.push_back(quantile_sorted(col, 0.01));
    env->q50.push_back(quantile_sorted(col, 0.50));
    env->q95.push_back(quantile_sorted(col, 0.95));
    env->q99.push_back(quantile_sorted(col, 0.99));
  }
  env->late_max.assign(sims, -kInf);
  env->early_max.assign(sims, -kInf);
  for (std::size_t k = 0; k < sims; ++k)
    for (Index s = 0; s < steps; ++s) {
      const Index m = env->m_first + s;
      const double z = env->standardize(m, traj[k][static_cast<std::size_t>(s)]);
      auto& slot = m >= env->late_start ? env->late_max[k] : env->early_max[k];
      slot = std::max(slot, z);
    }
  return env;
}

}  // namespace

double FsEnvelope::standardize(Index m, double v) const {
  const auto s = static_cast<std::size_t>(m - m_first);
  const double spread = q95[s] - q50[s];
  return (v - q50[s]) / (spread > 0.0 ? spread : 1.0);
}

FsEnvelope::Thresholds FsEnvelope::thresholds(double alpha, double early_share) const {
  std::vector<double> early = early_max, late = late_max;
  std::sort(early.begin(), early.end());
  std::sort(late.begin(), late.end());
  auto at = [&](double c) {
    return Thresholds{early_share > 0.0 ? quantile_sorted(early, 1.0 - std::min(1.0, early_share * c)) : kInf,
                      quantile_sorted(late, 1.0 - std::min(1.0, (1.0 - early_share) * c))};
  };
  auto rate = [&](const Thresholds& t) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < late_max.size(); ++k) hits += early_max[k] > t.early || late_max[k] > t.late;
    return static_cast<double>(hits) / static_cast<double>(late_max.size());
  };
  // Spending alpha in both parts at nominal shares overshoots by the
  // overlap; scale the shares up until the union rate reaches alpha.
  double lo = alpha, hi = alpha / std::max(early_share, 1.0 - early_share);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate(at(mid)) <= alpha ? lo : hi) = mid;
  }
  return at(lo);
}

std::shared_ptr<const FsEnvelope> fs_envelopes(Index n, Index p, const FsConfig& cfg) {
  cfg.validate();
  const EnvKey key{n, p, cfg.envelope_sims, cfg.init_subsets, cfg.envelope_seed};
  std::promise<std::shared_ptr<const FsEnvelope>> promise;
  std::shared_future<std::shared_ptr<const FsEnvelope>> fut;
  {
    std::lock_guard lock(g_env_mutex);
    if (auto it = g_env_cache.find(key); it != g_env_cache.end()) {
      fut = it->second;
    } else {
      g_env_cache.emplace(key, promise.get_future().share());
    }
  }
  if (fut.valid()) return fut.get();

  try {
    std::shared_ptr<const FsEnvelope> env;
    const std::string path = cfg.cache_dir.empty() ? std::string{} : cache_file(cfg, n, p);
    if (!path.empty()) env = load_envelope(path);
    if (!env) {
      if (cfg.envelope_source == EnvelopeSource::Stored)
        throw DomainError("fs: no stored envelope for n=" + std::to_string(n) + ", p=" + std::to_string(p) +
                          (path.empty() ? " (no cache directory set)" : " in " + path));
      env = simulate_envelope(n, p, cfg);
      if (!path.empty()) store_envelope(*env, path);
    }
    promise.set_value(env);
    return env;
  } catch (...) {
    {
      std::lock_guard lock(g_env_mutex);
      g_env_cache.erase(key);
    }
    promise.set_exception(std::current_exception());
    throw;
  }
}

void fs_clear_envelope_cache() {
  std::lock_guard lock(g_env_mutex);
  g_env_cache.clear();
}

double fs_envelope_approx(Index n, Index p, Index m, double gamma) {
  if (!(m > p && m < n)) throw DomainError("fs_envelope_approx: need p < m < n");
  static const boost::math::normal_distribution<double> nd;
  const double b = boost::math::ibeta_inv(static_cast<double>(m + 1), static_cast<double>(n - m), gamma);
  const boost::math::students_t_distribution<double> t(static_cast<double>(m - p));
  const double q = boost::math::quantile(t, 0.5 * (1.0 + b));
  const double frac = static_cast<double>(m) / static_cast<double>(n);
  const double a = boost::math::quantile(nd, 0.5 * (1.0 + frac));
  const double corr = 1.0 - 2.0 * a * boost::math::pdf(nd, a) / frac;
  return q / std::sqrt(corr);
}

double deletion_residual(const Dataset& data, const FitResult& subset_fit, Index row) {
  IndexSet idx;
  for (Index i = 0; i < data.n(); ++i)
    if (subset_fit.weights(i) > 0.5) idx.push_back(i);
  if (subset_fit.weights(row) > 0.5) throw DomainError("deletion_residual: row is inside the subset");
  const LeastSquaresSolver ls(gather_rows(data.X, idx));
  const double h = ls.leverage(data.X.row(row).transpose());
  const double e = data.y(row) - data.X.row(row).dot(subset_fit.beta_hat);
  return e / (subset_fit.sigma_hat * std::sqrt(1.0 + h));
}

IndexSet fs_step(const Dataset& data, const IndexSet& current) {
  const auto m = static_cast<Index>(current.size());
  if (m >= data.n()) throw DomainError("fs_step: subset already holds every row");
  const FitResult fit = ols_fit_rows(data, current);
  const Vector r2 = fit.residuals(data).array().square().matrix();
  return smallest_rows(r2, m + 1);
}

DuplicateCollapse handle_duplicate_collapse(const Dataset& data, const IndexSet& subset) {
  const Index p = data.p();
  auto less = [&](Index a, Index b) {
    if (data.y(a) != data.y(b)) return data.y(a) < data.y(b);
    for (Index j = 0; j < p; ++j)
      if (data.X(a, j) != data.X(b, j)) return data.X(a, j) < data.X(b, j);
    return false;
  };
  auto same = [&](Index a, Index b) { return !less(a, b) && !less(b, a); };

  IndexSet sorted = subset;
  std::sort(sorted.begin(), sorted.end(), [&](Index a, Index b) { return less(a, b) || (!less(b, a) && a < b); });
  IndexSet representatives;
  for (std::size_t k = 0; k < sorted.size();) {
    std::size_t e = k + 1;
    while (e < sorted.size() && same(sorted[k], sorted[e])) ++e;
    if (e - k >= 2) representatives.push_back(sorted[k]);
    k = e;
  }
  DuplicateCollapse out;
  if (representatives.empty()) {
    out.subset = subset;
    return out;
  }
  for (Index i = 0; i < data.n(); ++i)
    for (auto r : representatives)
      if (i != r && same(i, r)) {
        out.deferred.push_back(i);
        break;
      }
  for (auto i : subset)
    if (!std::binary_search(out.deferred.begin(), out.deferred.end(), i)) out.subset.push_back(i);
  return out;
}

std::pair<FitResult, FsTrajectory> fs_fit(const Dataset& data, const FsConfig& cfg) {
  data.validate();
  cfg.validate();
  const Index n = data.n();
  const Index p = data.p();
  if (n < p + 2) throw DomainError("fs: need n >= p + 2");

  IndexSet init = initial_subset(data, cfg);
  const Index m0 = static_cast<Index>(init.size());
  SearchResult sr = run_search(data, std::move(init), true, cfg.keep_subsets);
  const auto env = fs_envelopes(n, p, cfg);
  const auto tau = env->thresholds(cfg.alpha, cfg.early_share);

  FsTrajectory traj;
  traj.m0 = m0;
  traj.m_first = std::max(m0, p + 1);
  for (Index m = traj.m_first; m < n; ++m) {
    const auto s = static_cast<std::size_t>(m - p - 1);
    traj.min_del_res.push_back(sr.v[s]);
    traj.env_lo.push_back(env->q01[s]);
    traj.env_hi.push_back(env->q99[s]);
  }
  traj.entered = std::move(sr.entered);
  traj.left = std::move(sr.left);
  traj.subsets = std::move(sr.subsets);
  traj.deferred = sr.deferred;
  std::sort(traj.deferred.begin(), traj.deferred.end());
  traj.collapsed = std::move(sr.collapsed);

  // Signal: the standardized statistic exceeds the threshold of its part of
  // the search.
  double z_max = -kInf;
  for (Index m = traj.m_first; m < n; ++m) {
    const double v = traj.min_del_res[static_cast<std::size_t>(m - traj.m_first)];
    const double z = env->standardize(m, v);
    const bool late = m >= env->late_start;
    z_max = std::max(z_max, z);
    if (traj.m_signal < 0 && z > (late ? tau.late : tau.early)) traj.m_signal = m;
  }

  // Resuperimposition: the first n' whose final-step 99% envelope is exceeded
  // by the trajectory at m = n' - 1 fixes m* = n' - 1.
  traj.m_star = n;
  if (traj.m_signal >= 0) {
    traj.m_star = traj.m_signal;
    for (Index np = traj.m_signal + 1; np <= n; ++np) {
      const Index m = np - 1;
      const double v = traj.min_del_res[static_cast<std::size_t>(m - traj.m_first)];
      const double bound = np == n ? env->q99.back() : fs_envelope_approx(np, p, m, 0.99);
      if (v > bound) {
        traj.m_star = m;
        break;
      }
    }
  }

  // Subset at m*: walk the entry/exit events back from the full sample.
  IndexSet S(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) S[static_cast<std::size_t>(i)] = i;
  for (Index m = n - 1; m >= traj.m_star; --m) {
    const auto& ent = traj.entered[static_cast<std::size_t>(m - m0)];
    const auto& lft = traj.left[static_cast<std::size_t>(m - m0)];
    IndexSet prev;
    std::set_difference(S.begin(), S.end(), ent.begin(), ent.end(), std::back_inserter(prev));
    prev.insert(prev.end(), lft.begin(), lft.end());
    std::sort(prev.begin(), prev.end());
    S.swap(prev);
  }
  // The events describe the subset at the start of each step; a collapse at
  // m* replaced it before the fit.
  if (const auto it = traj.collapsed.find(traj.m_star); it != traj.collapsed.end()) S = it->second;

  FitResult fit;
  if (traj.m_star == n) {
    fit = ols_fit(data);
  } else {
    fit = ols_fit_rows(data, S);
    const double frac = std::max(0.5, static_cast<double>(traj.m_star) / static_cast<double>(n));
    fit.sigma_hat *= consistency_factor(frac, 1);
  }
  fit.method = Method::FS;
  fit.diagnostics["m_star"] = static_cast<double>(traj.m_star);
  fit.diagnostics["m_signal"] = static_cast<double>(traj.m_signal);
  fit.diagnostics["signal"] = traj.m_signal >= 0 ? 1.0 : 0.0;
  fit.diagnostics["threshold_early"] = tau.early;
  fit.diagnostics["threshold_late"] = tau.late;
  fit.diagnostics["max_standardized"] = z_max;
  fit.diagnostics["deferred"] = static_cast<double>(traj.deferred.size());
  fit.diagnostics["collapses"] = static_cast<double>(sr.collapses);
  return {std::move(fit), std::move(traj)};
}

void write_trajectory_csv(const FsTrajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  auto join = [](const IndexSet& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " " : "") + std::to_string(v[k]);
    return s;
  };
  out << "m,min_del_res,env_lo,env_hi,entered,left\n";
  out.precision(17);
  for (std::size_t k = 0; k < traj.entered.size(); ++k) {
    const Index m = traj.m0 + static_cast<Index>(k);
    out << m << ',';
    if (m >= traj.m_first) {
      const auto s = static_cast<std::size_t>(m - traj.m_first);
      out << traj.min_del_res[s] << ',' << traj.env_lo[s] << ',' << traj.env_hi[s];
    } else {
      out << ",,";
    }
    out << ',' << join(traj.entered[k]) << ',' << join(traj.left[k]) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace robreg
