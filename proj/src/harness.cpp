#include "robreg/harness.hpp"

#include "robreg/parallel.hpp"

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace robreg {

namespace {

// Purposes mixed into the stream keys.
enum : std::uint64_t { kCarriers = 1, kData = 2, kMethods = 3, kBase = 4, kSize = 5 };

std::uint64_t u64(Index v) { return static_cast<std::uint64_t>(v); }

bool wants(const std::vector<Method>& methods, Method m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

void check_methods(const std::vector<Method>& methods) {
  if (methods.empty()) throw DomainError("methods: at least one method is required");
  for (Method m : methods)
    if (m == Method::OLS) throw DomainError("methods: OLS is not an experiment method");
}

template <class Body>
MethodRun attempt(Body&& body) {
  MethodRun run;
  try {
    body(run);
  } catch (const EstimationFailure& e) {
    run.error = e.what();
  } catch (const SingularDesignError& e) {
    run.error = e.what();
  } catch (const NumericSolverError& e) {
    run.error = e.what();
  }
  return run;
}

MethodRun failed_because(Method base) {
  MethodRun run;
  run.error = std::string(to_string(base)) + " failed";
  return run;
}

// Makes sure the FS null envelope is simulated once, with every worker,
// before replicates start asking for it.
void prewarm_envelope(const std::vector<Method>& methods, const MethodSettings& s, Index n, Index p,
                      unsigned threads) {
  if (!wants(methods, Method::FS)) return;
  FsConfig fs = s.fs;
  fs.threads = threads;
  fs_envelopes(n, p, fs);
}

struct ReplicateOutcome {
  std::map<Method, Vector> beta;
  std::map<Method, std::vector<bool>> flags;
  std::vector<Method> failed;
};

ReplicateOutcome summarize(const std::map<Method, MethodRun>& runs) {
  ReplicateOutcome out;
  for (const auto& [m, run] : runs) {
    if (run.error) {
      out.failed.push_back(m);
      continue;
    }
    out.beta[m] = run.fit.beta_hat;
    out.flags[m] = run.flags;
  }
  return out;
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::ofstream open_csv(const std::string& path, const char* header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path);
  out << header << '\n';
  return out;
}

void close_csv(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

std::string_view name(Method m) { return to_string(m); }

}  // namespace

void MethodSettings::validate() const {
  test.validate();
  subset.validate();
  fs.validate();
  if (!(s_bdp > 0.0 && s_bdp <= 0.5)) throw DomainError("s_bdp must lie in (0, 0.5]");
  if (!(mm_efficiency > 0.5 && mm_efficiency < 1.0)) throw DomainError("mm_efficiency must lie in (0.5, 1)");
}

std::vector<Method> all_methods() { return {Method::FS, Method::LTS, Method::LTSR, Method::S, Method::MM}; }

std::map<Method, MethodRun> run_methods(const Dataset& data, const std::vector<Method>& methods,
                                        const MethodSettings& settings, const RngStream& rng) {
  std::map<Method, MethodRun> out;
  auto stream = [&](Method m) { return rng.substream(static_cast<std::uint64_t>(m) + 1); };

  if (wants(methods, Method::FS)) {
    out[Method::FS] = attempt([&](MethodRun& run) {
      FsConfig fs = settings.fs;
      fs.rng = stream(Method::FS);
      fs.threads = 1;
      auto [fit, traj] = fs_fit(data, fs);
      run.fit = std::move(fit);
      run.flags = run.fit.outlier_flags;
      run.trajectory = std::make_shared<const FsTrajectory>(std::move(traj));
    });
  }

  if (wants(methods, Method::LTS) || wants(methods, Method::LTSR)) {
    const MethodRun lts = attempt([&](MethodRun& run) {
      LtsConfig cfg;
      cfg.subset = settings.subset;
      cfg.subset.rng = stream(Method::LTS);
      run.fit = lts_fit(data, cfg);
      run.flags = outlier_test(data, run.fit, settings.test);
    });
    if (wants(methods, Method::LTSR)) {
      out[Method::LTSR] = lts.error ? failed_because(Method::LTS) : attempt([&](MethodRun& run) {
        run.fit = lts_reweight(data, lts.fit, settings.test);
        run.flags = outlier_test(data, run.fit, settings.test);
      });
    }
    if (wants(methods, Method::LTS)) out[Method::LTS] = lts;
  }

  if (wants(methods, Method::S) || wants(methods, Method::MM)) {
    const MethodRun s = attempt([&](MethodRun& run) {
      SubsetConfig cfg = settings.subset;
      cfg.rng = stream(Method::S);
      run.fit = s_estimate(data, tuning_from_bdp(settings.s_bdp), cfg);
      run.flags = outlier_test(data, run.fit, settings.test);
    });
    if (wants(methods, Method::MM)) {
      out[Method::MM] = s.error ? failed_because(Method::S) : attempt([&](MethodRun& run) {
        run.fit = mm_estimate(data, s.fit, settings.mm_efficiency);
        run.flags = outlier_test(data, run.fit, settings.test);
      });
    }
    if (wants(methods, Method::S)) out[Method::S] = s;
  }
  return out;
}

// Lambda experiment --------------------------------------------------------

M2Spec LambdaExperimentConfig::m2_at(double lambda) const {
  return M2Spec{mu_of_lambda(model, d, mu2, lambda), Sigma};
}

void LambdaExperimentConfig::validate() const {
  model.validate();
  if (n1 < 1) throw DomainError("n1 must be positive");
  if (n2 < 1) throw DomainError("n2 must be positive");
  if (Sigma.rows() != model.slopes() + 1 || Sigma.cols() != model.slopes() + 1)
    throw DomainError("Sigma must be square of size p (response and carriers)");
  if (!std::isfinite(d) || !std::isfinite(mu2)) throw DomainError("d and mu2 must be finite");
  if (lambda_grid.empty()) throw DomainError("lambda grid is empty");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!std::isfinite(lambda_grid[i])) throw DomainError("lambda grid must be finite");
    if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1]))
      throw DomainError("lambda grid must be strictly ascending");
  }
  M2Spec{mu_of_lambda(model, d, mu2, lambda_grid.front()), Sigma}.validate();
  check_methods(methods);
  if (replicates < 2) throw DomainError("replicates must be at least 2");
  if (n1 + n2 <= model.slopes() + 1) throw DomainError("n1 + n2 must exceed p");
  settings.validate();
  overlap.validate();
}

const LambdaCell& LambdaResult::cell(std::size_t lambda_index, Method m) const {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& c = cells[k];
    if (c.method == m && c.lambda == overlap.at(lambda_index).lambda) return c;
  }
  throw DomainError("no cell for method " + std::string(to_string(m)));
}

namespace {

Dataset lambda_sample(const LambdaExperimentConfig& cfg, Index rep, Index li) {
  RngStream cx(cfg.seed, stream_key({u64(rep), kCarriers}));
  const Matrix X = draw_carriers(cfg.model, cfg.n1, cx);
  RngStream rd(cfg.seed, stream_key({u64(rep), u64(li), kData}));
  return sample_mixture(cfg.model, cfg.m2_at(cfg.lambda_grid[static_cast<std::size_t>(li)]), cfg.n1, cfg.n2,
                        rd, &X);
}

OverlapReport overlap_row(const LambdaExperimentConfig& cfg, double lambda, double empirical_mean) {
  const M2Spec m2 = cfg.m2_at(lambda);
  OverlapReport row;
  row.lambda = lambda;
  row.empirical = empirical_mean;
  row.theoretical = theoretical_overlap(cfg.model, m2, cfg.overlap);
  row.mahalanobis_sq = mahalanobis_sq(m1_centre(cfg.model), m2.mu, cfg.Sigma);
  return row;
}

}  // namespace

std::vector<OverlapReport> run_overlap(const LambdaExperimentConfig& cfg) {
  cfg.validate();
  const auto L = static_cast<Index>(cfg.lambda_grid.size());
  std::vector<double> emp(static_cast<std::size_t>(L * cfg.replicates));
  parallel_for(emp.size(), cfg.threads, [&](std::size_t t) {
    const Index rep = static_cast<Index>(t) / L, li = static_cast<Index>(t) % L;
    const Dataset d = lambda_sample(cfg, rep, li);
    emp[t] = empirical_overlap(d, cfg.model, cfg.m2_at(cfg.lambda_grid[static_cast<std::size_t>(li)]), cfg.overlap);
  });
  std::vector<OverlapReport> out;
  for (Index li = 0; li < L; ++li) {
    double acc = 0.0;
    for (Index rep = 0; rep < cfg.replicates; ++rep) acc += emp[static_cast<std::size_t>(rep * L + li)];
    out.push_back(overlap_row(cfg, cfg.lambda_grid[static_cast<std::size_t>(li)], acc / static_cast<double>(cfg.replicates)));
  }
  return out;
}

LambdaResult run_lambda_experiment(const LambdaExperimentConfig& cfg) {
  cfg.validate();
  const auto L = static_cast<Index>(cfg.lambda_grid.size());
  const Index R = cfg.replicates;
  prewarm_envelope(cfg.methods, cfg.settings, cfg.n1 + cfg.n2, cfg.model.slopes() + 1, cfg.threads);

  struct Task {
    ReplicateOutcome outcome;
    double overlap = 0.0;
  };
  std::vector<Task> tasks(static_cast<std::size_t>(R * L));
  parallel_for(tasks.size(), cfg.threads, [&](std::size_t t) {
    const Index rep = static_cast<Index>(t) / L, li = static_cast<Index>(t) % L;
    const Dataset d = lambda_sample(cfg, rep, li);
    const double lambda = cfg.lambda_grid[static_cast<std::size_t>(li)];
    tasks[t].overlap = empirical_overlap(d, cfg.model, cfg.m2_at(lambda), cfg.overlap);
    const RngStream rng(cfg.seed, stream_key({u64(rep), u64(li), kMethods}));
    tasks[t].outcome = summarize(run_methods(d, cfg.methods, cfg.settings, rng));
  });

  LambdaResult result;
  const Vector truth = cfg.model.coefficients();
  const InformationMatrix info = InformationMatrix::analytic_uniform(cfg.model);
  const auto n2 = static_cast<double>(cfg.n2);
  for (Index li = 0; li < L; ++li) {
    const double lambda = cfg.lambda_grid[static_cast<std::size_t>(li)];
    double overlap_acc = 0.0;
    std::map<Method, Index> failures;
    std::map<Method, std::vector<Vector>> est;
    std::map<Method, std::vector<double>> power;
    for (Index rep = 0; rep < R; ++rep) {
      const Task& task = tasks[static_cast<std::size_t>(rep * L + li)];
      overlap_acc += task.overlap;
      ++result.attempted;
      for (Method m : task.outcome.failed) ++failures[m];
      if (!task.outcome.failed.empty()) {
        ++result.dropped;
        continue;
      }
      for (Method m : cfg.methods) {
        est[m].push_back(task.outcome.beta.at(m));
        const auto& f = task.outcome.flags.at(m);
        Index hits = 0;
        for (Index i = cfg.n1; i < cfg.n1 + cfg.n2; ++i) hits += f[static_cast<std::size_t>(i)];
        power[m].push_back(static_cast<double>(hits) / n2);
      }
    }
    result.overlap.push_back(overlap_row(cfg, lambda, overlap_acc / static_cast<double>(R)));
    for (Method m : cfg.methods) {
      LambdaCell cell;
      cell.lambda = lambda;
      cell.method = m;
      cell.failures = failures[m];
      cell.replicates = static_cast<Index>(est[m].size());
      if (cell.replicates >= 2) {
        cell.coef = accumulate(est[m], truth);
        Vector mean(truth.size());
        for (Index j = 0; j < truth.size(); ++j) mean(j) = cell.coef[static_cast<std::size_t>(j)].mean;
        cell.bias_norm = bias_norm(mean, truth, info);
        double acc = 0.0;
        for (double v : power[m]) acc += v;
        cell.power = acc / static_cast<double>(cell.replicates);
        cell.power_count = cell.power * n2;
        cell.power_se = sample_sd(power[m]) / std::sqrt(static_cast<double>(cell.replicates));
      } else {
        cell.coef.assign(static_cast<std::size_t>(truth.size()), CoefSummary{NAN, NAN, NAN, NAN, NAN});
        cell.bias_norm = cell.power = cell.power_count = cell.power_se = NAN;
      }
      cell.estimates = std::move(est[m]);
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

// Point grid ---------------------------------------------------------------

TrueModel PointGridConfig::default_model() {
  static const boost::math::normal_distribution<double> nd;
  TrueModel m;
  m.alpha = 0.0;
  m.beta = Vector::Zero(1);
  m.sigma_eps = 0.5 / boost::math::quantile(nd, 0.975);
  m.region = {{0.0, 1.0}};
  return m;
}

void PointGridConfig::validate() const {
  model.validate();
  if (model.slopes() != 1) throw DomainError("point grid: exactly one carrier is supported");
  if (x0_grid.empty()) throw DomainError("x0 grid is empty");
  if (y0_grid.empty()) throw DomainError("y0 grid is empty");
  for (double v : x0_grid)
    if (!std::isfinite(v)) throw DomainError("x0 grid must be finite");
  for (double v : y0_grid)
    if (!std::isfinite(v)) throw DomainError("y0 grid must be finite");
  for (std::size_t i = 1; i < x0_grid.size(); ++i)
    if (!(x0_grid[i] > x0_grid[i - 1])) throw DomainError("x0 grid must be strictly ascending");
  if (n_base <= 2) throw DomainError("n_base must exceed p");
  if (k < 1) throw DomainError("k must be positive");
  check_methods(methods);
  if (replicates < 2) throw DomainError("replicates must be at least 2");
  settings.validate();
  overlap.validate();
}

PointGridResult run_point_grid(const PointGridConfig& cfg) {
  cfg.validate();
  const auto X0 = static_cast<Index>(cfg.x0_grid.size());
  const auto G = X0 * static_cast<Index>(cfg.y0_grid.size());
  const Index R = cfg.replicates;
  prewarm_envelope(cfg.methods, cfg.settings, cfg.n_base + cfg.k, 2, cfg.threads);

  const M2Spec unused{Vector::Zero(2), Matrix::Zero(2, 2)};
  auto point_mass = [&](Index g) {
    const double x0 = cfg.x0_grid[static_cast<std::size_t>(g % X0)];
    const double y0 = cfg.y0_grid[static_cast<std::size_t>(g / X0)];
    return M2Spec{(Vector(2) << y0, x0).finished(), Matrix::Zero(2, 2)};
  };

  std::vector<ReplicateOutcome> tasks(static_cast<std::size_t>(R * G));
  std::vector<double> overlap(static_cast<std::size_t>(G), 0.0);
  parallel_for(tasks.size(), cfg.threads, [&](std::size_t t) {
    const Index rep = static_cast<Index>(t) / G, g = static_cast<Index>(t) % G;
    RngStream rb(cfg.seed, stream_key({u64(rep), kBase}));
    const Dataset base = sample_mixture(cfg.model, unused, cfg.n_base, 0, rb);
    const M2Spec pm = point_mass(g);
    const Dataset d = point_contaminate(base, pm.mu.tail(1), pm.mu(0), cfg.k);
    if (rep == 0) overlap[static_cast<std::size_t>(g)] = empirical_overlap(d, cfg.model, pm, cfg.overlap);
    const RngStream rng(cfg.seed, stream_key({u64(rep), u64(g), kMethods}));
    tasks[t] = summarize(run_methods(d, cfg.methods, cfg.settings, rng));
  });

  PointGridResult result;
  const Vector truth = cfg.model.coefficients();
  std::map<Method, std::vector<double>> running;
  for (Index g = 0; g < G; ++g) {
    if (g % X0 == 0) running.clear();
    std::map<Method, Index> failures;
    std::map<Method, std::vector<Vector>> est;
    for (Index rep = 0; rep < R; ++rep) {
      const auto& o = tasks[static_cast<std::size_t>(rep * G + g)];
      ++result.attempted;
      for (Method m : o.failed) ++failures[m];
      if (!o.failed.empty()) {
        ++result.dropped;
        continue;
      }
      for (Method m : cfg.methods) est[m].push_back(o.beta.at(m));
    }
    for (Method m : cfg.methods) {
      PointGridCell cell;
      cell.x0 = cfg.x0_grid[static_cast<std::size_t>(g % X0)];
      cell.y0 = cfg.y0_grid[static_cast<std::size_t>(g / X0)];
      cell.method = m;
      cell.overlap = overlap[static_cast<std::size_t>(g)];
      cell.failures = failures[m];
      cell.replicates = static_cast<Index>(est[m].size());
      auto& run = running[m];
      run.resize(static_cast<std::size_t>(truth.size()), 0.0);
      if (cell.replicates >= 2) {
        cell.coef = accumulate(est[m], truth);
      } else {
        cell.coef.assign(static_cast<std::size_t>(truth.size()), CoefSummary{NAN, NAN, NAN, NAN, NAN});
      }
      for (std::size_t j = 0; j < cell.coef.size(); ++j) {
        cell.mse.push_back(cell.coef[j].sq_bias + cell.coef[j].variance);
        run[j] += cell.mse.back();
        cell.cum_mse.push_back(run[j]);
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

// Size ---------------------------------------------------------------------

void SizeExperimentConfig::validate() const {
  if (p < 1) throw DomainError("p must be positive");
  if (n_grid.empty()) throw DomainError("n grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] <= p + 1) throw DomainError("every n must exceed p + 1");
    if (i > 0 && !(n_grid[i] > n_grid[i - 1])) throw DomainError("n grid must be strictly ascending");
  }
  check_methods(methods);
  if (replicates < 1) throw DomainError("replicates must be positive");
  settings.validate();
}

SizeResult run_size_experiment(const SizeExperimentConfig& cfg) {
  cfg.validate();
  const auto N = static_cast<Index>(cfg.n_grid.size());
  const Index R = cfg.replicates;
  const Index n_max = cfg.n_grid.back();
  for (Index n : cfg.n_grid) prewarm_envelope(cfg.methods, cfg.settings, n, cfg.p, cfg.threads);

  std::vector<std::map<Method, bool>> any(static_cast<std::size_t>(R * N));
  std::vector<std::vector<Method>> failed(any.size());
  parallel_for(any.size(), cfg.threads, [&](std::size_t t) {
    const Index rep = static_cast<Index>(t) / N, ni = static_cast<Index>(t) % N;
    // The full replicate sample; each task analyses its prefix.
    RngStream rd(cfg.seed, stream_key({u64(rep), kSize}));
    Matrix X(n_max, cfg.p);
    Vector y(n_max);
    for (Index i = 0; i < n_max; ++i) {
      X(i, 0) = 1.0;
      for (Index j = 1; j < cfg.p; ++j) X(i, j) = rd.normal();
      y(i) = X.row(i).sum() + rd.normal();
    }
    const Dataset d = Dataset{std::move(y), std::move(X)}.head(cfg.n_grid[static_cast<std::size_t>(ni)]);
    const RngStream rng(cfg.seed, stream_key({u64(rep), u64(ni), kMethods}));
    const ReplicateOutcome o = summarize(run_methods(d, cfg.methods, cfg.settings, rng));
    failed[t] = o.failed;
    for (const auto& [m, f] : o.flags) any[t][m] = std::find(f.begin(), f.end(), true) != f.end();
  });

  SizeResult result;
  for (Index ni = 0; ni < N; ++ni) {
    std::map<Method, Index> failures;
    std::map<Method, std::vector<bool>> ind;
    for (Index rep = 0; rep < R; ++rep) {
      const auto t = static_cast<std::size_t>(rep * N + ni);
      ++result.attempted;
      for (Method m : failed[t]) ++failures[m];
      if (!failed[t].empty()) {
        ++result.dropped;
        continue;
      }
      for (Method m : cfg.methods) ind[m].push_back(any[t].at(m));
    }
    for (Method m : cfg.methods) {
      SizeRow row;
      row.n = cfg.n_grid[static_cast<std::size_t>(ni)];
      row.p = cfg.p;
      row.method = m;
      row.failures = failures[m];
      if (!ind[m].empty()) row.estimate = size_estimate(ind[m]);
      else row.estimate = SizeEstimate{NAN, NAN, 0};
      result.rows.push_back(row);
    }
  }
  return result;
}

// Output -------------------------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

void write_metrics_csv(const LambdaResult& r, const std::string& path) {
  auto out = open_csv(path, "lambda,method,coef,sq_bias,variance,mad,power,replicates");
  for (const auto& c : r.cells)
    for (std::size_t j = 0; j < c.coef.size(); ++j)
      out << format_double(c.lambda) << ',' << name(c.method) << ',' << j << ','
          << format_double(c.coef[j].sq_bias) << ',' << format_double(c.coef[j].variance) << ','
          << format_double(c.coef[j].mad) << ',' << format_double(c.power) << ',' << c.replicates << '\n';
  close_csv(out, path);
}

void write_partial_sums_csv(const LambdaResult& r, const std::string& path) {
  auto out = open_csv(path, "lambda,method,coef,cum_sq_bias,cum_variance");
  std::map<std::pair<Method, std::size_t>, std::pair<double, double>> run;
  for (const auto& c : r.cells)
    for (std::size_t j = 0; j < c.coef.size(); ++j) {
      auto& [b, v] = run[{c.method, j}];
      b += c.coef[j].sq_bias;
      v += c.coef[j].variance;
      out << format_double(c.lambda) << ',' << name(c.method) << ',' << j << ',' << format_double(b) << ','
          << format_double(v) << '\n';
    }
  close_csv(out, path);
}

void write_power_csv(const LambdaResult& r, const std::string& path) {
  auto out = open_csv(path, "lambda,method,power,power_se,power_count,bias_norm,failures,replicates");
  for (const auto& c : r.cells)
    out << format_double(c.lambda) << ',' << name(c.method) << ',' << format_double(c.power) << ','
        << format_double(c.power_se) << ',' << format_double(c.power_count) << ','
        << format_double(c.bias_norm) << ',' << c.failures << ',' << c.replicates << '\n';
  close_csv(out, path);
}

void write_estimates_csv(const LambdaResult& r, const std::string& path) {
  auto out = open_csv(path, "lambda,method,sample,coef,estimate");
  for (const auto& c : r.cells)
    for (std::size_t k = 0; k < c.estimates.size(); ++k)
      for (Index j = 0; j < c.estimates[k].size(); ++j)
        out << format_double(c.lambda) << ',' << name(c.method) << ',' << k << ',' << j << ','
            << format_double(c.estimates[k](j)) << '\n';
  close_csv(out, path);
}

void write_overlap_csv(const std::vector<OverlapReport>& rows, const std::string& path) {
  auto out = open_csv(path, "lambda,empirical,theoretical,mahal_sq");
  for (const auto& o : rows)
    out << format_double(o.lambda) << ',' << format_double(o.empirical) << ',' << format_double(o.theoretical)
        << ',' << format_double(o.mahalanobis_sq) << '\n';
  close_csv(out, path);
}

void write_point_grid_csv(const PointGridResult& r, const std::string& path) {
  auto out = open_csv(path, "x0,y0,method,coef,sq_bias,variance,mad,mse,cum_mse,overlap,replicates");
  for (const auto& c : r.cells)
    for (std::size_t j = 0; j < c.coef.size(); ++j)
      out << format_double(c.x0) << ',' << format_double(c.y0) << ',' << name(c.method) << ',' << j << ','
          << format_double(c.coef[j].sq_bias) << ',' << format_double(c.coef[j].variance) << ','
          << format_double(c.coef[j].mad) << ',' << format_double(c.mse[j]) << ','
          << format_double(c.cum_mse[j]) << ',' << format_double(c.overlap) << ',' << c.replicates << '\n';
  close_csv(out, path);
}

void write_size_csv(const SizeResult& r, const std::string& path) {
  auto out = open_csv(path, "n,p,method,size,se,replicates");
  for (const auto& row : r.rows)
    out << row.n << ',' << row.p << ',' << name(row.method) << ',' << format_double(row.estimate.size) << ','
        << format_double(row.estimate.se) << ',' << row.estimate.replicates << '\n';
  close_csv(out, path);
}

}  // namespace robreg
