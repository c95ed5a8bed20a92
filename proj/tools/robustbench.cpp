// robustbench: contamination experiments and robust fits from the command line.
//
// Exit status: 0 success, 2 invalid input or configuration, 3 estimation
// failures above threshold, 4 I/O error.

#include "robreg/config.hpp"
#include "robreg/io.hpp"
#include "robreg/linalg.hpp"

#include <CLI11.hpp>
#include <boost/version.hpp>
#include <fmt/core.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace robreg;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr double kMaxFailureRate = 0.005;

enum Exit : int { kOk = 0, kInvalid = 2, kFailures = 3, kIo = 4 };

struct Common {
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<Index> reps;
  unsigned threads = 0;
  std::vector<std::string> methods;
  std::optional<double> alpha;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-o,--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Root seed (overrides the config)");
  cmd->add_option("--reps", c.reps, "Replicates (overrides the config)");
  cmd->add_option("--threads", c.threads, "Worker threads (0: all cores)");
  cmd->add_option("--methods", c.methods, "Subset of FS LTS LTSR S MM")->delimiter(',');
  cmd->add_option("--alpha", c.alpha, "Samplewise size of the outlier tests");
}

template <class Cfg>
void apply_common(Cfg& cfg, const Common& c) {
  if (c.seed) cfg.seed = *c.seed;
  if (c.reps) cfg.replicates = *c.reps;
  cfg.threads = c.threads;
  if (!c.methods.empty()) {
    cfg.methods.clear();
    for (const auto& m : c.methods) cfg.methods.push_back(method_from_string(m));
  }
  if (c.alpha) cfg.settings.test.alpha = cfg.settings.fs.alpha = *c.alpha;
  if (const char* dir = std::getenv("ROBUSTBENCH_CACHE")) cfg.settings.fs.cache_dir = dir;
  cfg.validate();
}

template <class Cfg>
Cfg expect(const std::string& path, const char* kind) {
  ExperimentConfig any = load_experiment(path);
  if (auto* c = std::get_if<Cfg>(&any)) return *c;
  throw ConfigError("experiment", std::string("this command needs a '") + kind + "' experiment");
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  return fs::path(dir);
}

int write_manifest(const fs::path& out, const std::string& command, const ExperimentConfig& cfg,
                   Index attempted, Index dropped, const std::map<std::string, Index>& by_method,
                   const std::vector<std::string>& files) {
  nlohmann::json m;
  m["tool"] = "robustbench";
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = to_json(cfg);
  m["seed"] = std::visit([](const auto& c) { return c.seed; }, cfg);
  m["versions"] = {{"robustbench", kVersion},
                   {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
                   {"boost", BOOST_LIB_VERSION},
                   {"fmt", FMT_VERSION}};
  m["failures"] = {{"attempted", attempted}, {"dropped", dropped}, {"by_method", by_method}};
  m["outputs"] = files;
  const auto path = (out / "manifest.json").string();
  std::ofstream f(path, std::ios::binary);
  f << m.dump(2) << '\n';
  if (!f) throw IoError("write failed: " + path);
  const double rate = attempted > 0 ? static_cast<double>(dropped) / static_cast<double>(attempted) : 0.0;
  if (rate > kMaxFailureRate) {
    fmt::print(stderr, "estimation failures: {} of {} replicates dropped\n", dropped, attempted);
    return kFailures;
  }
  return kOk;
}

template <class Cells>
std::map<std::string, Index> failures_by_method(const Cells& cells) {
  std::map<std::string, Index> out;
  for (const auto& c : cells) out[std::string(to_string(c.method))] += c.failures;
  return out;
}

int cmd_simulate(const std::string& config, const Common& c) {
  auto cfg = expect<LambdaExperimentConfig>(config, "lambda");
  apply_common(cfg, c);
  fmt::print("simulate {}: {} lambda values x {} replicates, seed {}\n", cfg.name, cfg.lambda_grid.size(),
             cfg.replicates, cfg.seed);
  const LambdaResult r = run_lambda_experiment(cfg);
  const fs::path out = prepare_out(c.out);
  write_metrics_csv(r, (out / "metrics.csv").string());
  write_partial_sums_csv(r, (out / "partial_sums.csv").string());
  write_power_csv(r, (out / "power.csv").string());
  write_estimates_csv(r, (out / "estimates.csv").string());
  write_overlap_csv(r.overlap, (out / "overlap.csv").string());
  return write_manifest(out, "simulate", cfg, r.attempted, r.dropped, failures_by_method(r.cells),
                        {"metrics.csv", "partial_sums.csv", "power.csv", "estimates.csv", "overlap.csv"});
}

int cmd_overlap(const std::string& config, const Common& c) {
  auto cfg = expect<LambdaExperimentConfig>(config, "lambda");
  apply_common(cfg, c);
  const auto rows = run_overlap(cfg);
  const fs::path out = prepare_out(c.out);
  write_overlap_csv(rows, (out / "overlap.csv").string());
  for (const auto& o : rows)
    fmt::print("lambda {:6.3f}  empirical {:.4f}  theoretical {:.4f}  mahal_sq {:.3f}\n", o.lambda, o.empirical,
               o.theoretical, o.mahalanobis_sq);
  return write_manifest(out, "overlap", cfg, 0, 0, {}, {"overlap.csv"});
}

int cmd_point_grid(const std::string& config, const Common& c) {
  auto cfg = expect<PointGridConfig>(config, "point-grid");
  apply_common(cfg, c);
  fmt::print("point-grid: {} x {} cells x {} replicates, seed {}\n", cfg.x0_grid.size(), cfg.y0_grid.size(),
             cfg.replicates, cfg.seed);
  const PointGridResult r = run_point_grid(cfg);
  const fs::path out = prepare_out(c.out);
  write_point_grid_csv(r, (out / "point_grid.csv").string());
  return write_manifest(out, "point-grid", cfg, r.attempted, r.dropped, failures_by_method(r.cells),
                        {"point_grid.csv"});
}

int cmd_size(const std::string& config, const std::optional<Index>& p, const std::string& n_grid, const Common& c) {
  SizeExperimentConfig cfg;
  if (!config.empty()) cfg = expect<SizeExperimentConfig>(config, "size");
  if (p) cfg.p = *p;
  if (!n_grid.empty()) cfg.n_grid = parse_n_grid(n_grid);
  if (config.empty() && n_grid.empty()) throw ConfigError("n", "give --n or a size config");
  apply_common(cfg, c);
  fmt::print("size: p = {}, {} sample sizes x {} replicates, seed {}\n", cfg.p, cfg.n_grid.size(), cfg.replicates,
             cfg.seed);
  const SizeResult r = run_size_experiment(cfg);
  const fs::path out = prepare_out(c.out);
  write_size_csv(r, (out / "size.csv").string());
  for (const auto& row : r.rows)
    fmt::print("n {:5d}  {:4s}  size {:.4f} (se {:.4f})\n", row.n, to_string(row.method), row.estimate.size,
               row.estimate.se);
  std::map<std::string, Index> by;
  for (const auto& row : r.rows) by[std::string(to_string(row.method))] += row.failures;
  return write_manifest(out, "size", cfg, r.attempted, r.dropped, by, {"size.csv"});
}

int cmd_fit(const std::string& csv, const Common& c) {
  const LabelledDataset d = read_dataset_csv(csv);
  MethodSettings s;
  if (c.alpha) s.test.alpha = s.fs.alpha = *c.alpha;
  if (const char* dir = std::getenv("ROBUSTBENCH_CACHE")) s.fs.cache_dir = dir;
  s.validate();
  std::vector<Method> methods = all_methods();
  if (!c.methods.empty()) {
    methods.clear();
    for (const auto& m : c.methods) methods.push_back(method_from_string(m));
  }
  const std::uint64_t seed = c.seed.value_or(1);
  fmt::print("fit {}: n = {}, p = {}, seed {}\n", csv, d.data.n(), d.data.p(), seed);
  // A rank-deficient design fails every method the same way; report it once.
  ols_fit(d.data);
  const auto runs = run_methods(d.data, methods, s, RngStream(seed, 0));
  bool failed = false;
  for (const auto& [m, run] : runs) {
    if (run.error) {
      fmt::print("{:4s}  failed: {}\n", to_string(m), *run.error);
      failed = true;
      continue;
    }
    std::string coef;
    for (Index j = 0; j < run.fit.beta_hat.size(); ++j) coef += fmt::format(" {:.6g}", run.fit.beta_hat(j));
    Index flagged = 0;
    for (bool f : run.flags) flagged += f;
    fmt::print("{:4s}  coef{}  scale {:.6g}  outliers {}\n", to_string(m), coef, run.fit.sigma_hat, flagged);
  }
  const fs::path out = prepare_out(c.out);
  write_fit_table(d, runs, (out / "fit.csv").string());
  if (const auto it = runs.find(Method::FS); it != runs.end() && it->second.trajectory)
    write_trajectory_csv(*it->second.trajectory, (out / "fs_trajectory.csv").string());
  return failed ? kFailures : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Very robust regression: contamination experiments and fits"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  std::string config, csv, n_grid;
  std::optional<Index> p;

  auto* simulate = app.add_subcommand("simulate", "Lambda experiment: bias, variance, power and overlap");
  simulate->add_option("config", config, "Experiment JSON")->required();
  add_common(simulate, common);

  auto* point = app.add_subcommand("point-grid", "Point contamination sweep");
  point->add_option("config", config, "Experiment JSON")->required();
  add_common(point, common);

  auto* size = app.add_subcommand("size", "Size of the outlier tests on clean nested samples");
  size->add_option("config", config, "Experiment JSON (optional)");
  size->add_option("--p", p, "Number of coefficients, intercept included");
  size->add_option("--n", n_grid, "Sample sizes: 100..1000, 100..1000:50 or 100,200,500");
  add_common(size, common);

  auto* overlap = app.add_subcommand("overlap", "Overlap indices along the lambda path");
  overlap->add_option("config", config, "Experiment JSON")->required();
  add_common(overlap, common);

  auto* fit = app.add_subcommand("fit", "Fit the robust estimators to a CSV dataset");
  fit->add_option("csv", csv, "Header row, then y, x1.. [, source]")->required();
  add_common(fit, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (*simulate) return cmd_simulate(config, common);
    if (*point) return cmd_point_grid(config, common);
    if (*size) return cmd_size(config, p, n_grid, common);
    if (*overlap) return cmd_overlap(config, common);
    if (*fit) return cmd_fit(csv, common);
  } catch (const IoError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kIo;
  } catch (const DomainError& e) {
    fmt::print(stderr, "invalid input: {}\n", e.what());
    return kInvalid;
  } catch (const SingularDesignError& e) {
    fmt::print(stderr, "estimation failure: {}\n", e.what());
    return kFailures;
  } catch (const EstimationFailure& e) {
    fmt::print(stderr, "estimation failure: {}\n", e.what());
    return kFailures;
  } catch (const NumericSolverError& e) {
    fmt::print(stderr, "estimation failure: {}\n", e.what());
    return kFailures;
  }
  return kOk;
}
