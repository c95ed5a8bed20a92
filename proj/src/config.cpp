#include "robreg/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace robreg {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(join(path, k), "unknown field");
}

const json& need(const json& j, const std::string& path, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(join(path, key), "missing required field");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

Index integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<Index>();
}

std::uint64_t unsigned_integer(const json& v, const std::string& path) {
  if (!v.is_number_unsigned()) throw ConfigError(path, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

template <class T, class Read>
T optional_field(const json& j, const std::string& path, const char* key, T fallback, Read read) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : read(*it, join(path, key));
}

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

/// Explicit list, or {"from", "to", "points"} with equal spacing (41 points
/// when omitted).
std::vector<double> real_grid(const json& v, const std::string& path) {
  if (v.is_array()) return number_list(v, path);
  only_keys(v, path, {"from", "to", "points"});
  const double from = number(need(v, path, "from"), join(path, "from"));
  const double to = number(need(v, path, "to"), join(path, "to"));
  const Index points = optional_field(v, path, "points", Index{41}, integer);
  if (points < 1) throw ConfigError(join(path, "points"), "must be positive");
  if (points == 1) return {from};
  std::vector<double> out;
  for (Index i = 0; i < points; ++i)
    out.push_back(i == points - 1 ? to : from + (to - from) * static_cast<double>(i) / static_cast<double>(points - 1));
  return out;
}

/// Explicit list, or {"from", "to", "step"}.
std::vector<Index> integer_grid(const json& v, const std::string& path) {
  std::vector<Index> out;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(integer(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }
  only_keys(v, path, {"from", "to", "step"});
  const Index from = integer(need(v, path, "from"), join(path, "from"));
  const Index to = integer(need(v, path, "to"), join(path, "to"));
  const Index step = integer(need(v, path, "step"), join(path, "step"));
  if (step < 1) throw ConfigError(join(path, "step"), "must be positive");
  for (Index n = from; n <= to; n += step) out.push_back(n);
  return out;
}

Matrix matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array of rows");
  const auto rows = static_cast<Index>(v.size());
  Matrix M(rows, rows);
  for (Index i = 0; i < rows; ++i) {
    const std::string rp = path + "[" + std::to_string(i) + "]";
    const auto row = number_list(v[static_cast<std::size_t>(i)], rp);
    if (static_cast<Index>(row.size()) != rows) throw ConfigError(rp, "matrix must be square");
    for (Index k = 0; k < rows; ++k) M(i, k) = row[static_cast<std::size_t>(k)];
  }
  return M;
}

json matrix_json(const Matrix& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (Index k = 0; k < M.cols(); ++k) r.push_back(M(i, k));
    rows.push_back(r);
  }
  return rows;
}

TrueModel model_from(const json& v, const std::string& path) {
  only_keys(v, path, {"alpha", "beta", "sigma", "region"});
  TrueModel m;
  m.alpha = number(need(v, path, "alpha"), join(path, "alpha"));
  const auto beta = number_list(need(v, path, "beta"), join(path, "beta"));
  m.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Index>(beta.size()));
  m.sigma_eps = number(need(v, path, "sigma"), join(path, "sigma"));
  const json& reg = need(v, path, "region");
  const std::string rp = join(path, "region");
  if (!reg.is_array() || reg.empty()) throw ConfigError(rp, "expected a non-empty array of [a, b] pairs");
  for (std::size_t i = 0; i < reg.size(); ++i) {
    const auto ab = number_list(reg[i], rp + "[" + std::to_string(i) + "]");
    if (ab.size() != 2) throw ConfigError(rp + "[" + std::to_string(i) + "]", "expected [a, b]");
    m.region.push_back({ab[0], ab[1]});
  }
  return m;
}

json model_json(const TrueModel& m) {
  json region = json::array();
  for (const auto& r : m.region) region.push_back({r.a, r.b});
  return {{"alpha", m.alpha},
          {"beta", std::vector<double>(m.beta.data(), m.beta.data() + m.beta.size())},
          {"sigma", m.sigma_eps},
          {"region", region}};
}

std::vector<Method> methods_from(const json& j, const std::string& path) {
  const auto it = j.find("methods");
  if (it == j.end()) return all_methods();
  const std::string mp = join(path, "methods");
  if (!it->is_array() || it->empty()) throw ConfigError(mp, "expected a non-empty array of method names");
  std::vector<Method> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const std::string ip = mp + "[" + std::to_string(i) + "]";
    if (!(*it)[i].is_string()) throw ConfigError(ip, "expected a method name");
    try {
      out.push_back(method_from_string((*it)[i].get<std::string>()));
    } catch (const DomainError& e) {
      throw ConfigError(ip, e.what());
    }
  }
  return out;
}

json methods_json(const std::vector<Method>& methods) {
  json out = json::array();
  for (Method m : methods) out.push_back(std::string(to_string(m)));
  return out;
}

MethodSettings settings_from(const json& j, const std::string& path) {
  MethodSettings s;
  s.test.alpha = optional_field(j, path, "alpha", s.test.alpha, number);
  s.fs.alpha = s.test.alpha;
  const auto it = j.find("estimators");
  if (it == j.end()) return s;
  const json& e = *it;
  const std::string ep = join(path, "estimators");
  only_keys(e, ep,
            {"n_elemental", "n_refine", "n_best", "fs_init_subsets", "fs_envelope_sims", "fs_envelope_seed",
             "fs_early_share", "s_bdp", "mm_efficiency"});
  s.subset.n_elemental = optional_field(e, ep, "n_elemental", s.subset.n_elemental, integer);
  s.subset.n_refine = optional_field(e, ep, "n_refine", s.subset.n_refine, integer);
  s.subset.n_best = optional_field(e, ep, "n_best", s.subset.n_best, integer);
  s.fs.init_subsets = optional_field(e, ep, "fs_init_subsets", s.fs.init_subsets, integer);
  s.fs.envelope_sims = optional_field(e, ep, "fs_envelope_sims", s.fs.envelope_sims, integer);
  s.fs.envelope_seed = optional_field(e, ep, "fs_envelope_seed", s.fs.envelope_seed, unsigned_integer);
  s.fs.early_share = optional_field(e, ep, "fs_early_share", s.fs.early_share, number);
  s.s_bdp = optional_field(e, ep, "s_bdp", s.s_bdp, number);
  s.mm_efficiency = optional_field(e, ep, "mm_efficiency", s.mm_efficiency, number);
  return s;
}

json settings_json(const MethodSettings& s) {
  return {{"n_elemental", s.subset.n_elemental},   {"n_refine", s.subset.n_refine},
          {"n_best", s.subset.n_best},             {"fs_init_subsets", s.fs.init_subsets},
          {"fs_envelope_sims", s.fs.envelope_sims}, {"fs_envelope_seed", s.fs.envelope_seed},
          {"fs_early_share", s.fs.early_share},     {"s_bdp", s.s_bdp},
          {"mm_efficiency", s.mm_efficiency}};
}

template <class Cfg>
void validated(const Cfg& cfg) {
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const DomainError& e) {
    throw ConfigError("", e.what());
  }
}

LambdaExperimentConfig lambda_from(const json& j) {
  only_keys(j, "",
            {"experiment", "name", "model", "contamination", "methods", "replicates", "seed", "alpha", "overlap",
             "estimators"});
  LambdaExperimentConfig cfg;
  cfg.name = optional_field(j, "", "name", std::string{}, [](const json& v, const std::string& p) {
    if (!v.is_string()) throw ConfigError(p, "expected a string");
    return v.get<std::string>();
  });
  cfg.model = model_from(need(j, "", "model"), "model");
  const json& c = need(j, "", "contamination");
  only_keys(c, "contamination", {"n1", "n2", "d", "mu2", "Sigma", "lambda"});
  cfg.n1 = integer(need(c, "contamination", "n1"), "contamination.n1");
  cfg.n2 = integer(need(c, "contamination", "n2"), "contamination.n2");
  cfg.d = number(need(c, "contamination", "d"), "contamination.d");
  cfg.mu2 = number(need(c, "contamination", "mu2"), "contamination.mu2");
  cfg.Sigma = matrix(need(c, "contamination", "Sigma"), "contamination.Sigma");
  cfg.lambda_grid = real_grid(need(c, "contamination", "lambda"), "contamination.lambda");
  cfg.methods = methods_from(j, "");
  cfg.replicates = optional_field(j, "", "replicates", cfg.replicates, integer);
  cfg.seed = optional_field(j, "", "seed", cfg.seed, unsigned_integer);
  cfg.settings = settings_from(j, "");
  if (const auto it = j.find("overlap"); it != j.end()) {
    only_keys(*it, "overlap", {"strip_multiplier"});
    cfg.overlap.strip_multiplier =
        optional_field(*it, "overlap", "strip_multiplier", cfg.overlap.strip_multiplier, number);
  }
  validated(cfg);
  return cfg;
}

PointGridConfig point_grid_from(const json& j) {
  only_keys(j, "",
            {"experiment", "x0", "y0", "n_base", "k", "model", "methods", "replicates", "seed", "alpha", "overlap",
             "estimators"});
  PointGridConfig cfg;
  cfg.x0_grid = real_grid(need(j, "", "x0"), "x0");
  cfg.y0_grid = real_grid(need(j, "", "y0"), "y0");
  cfg.n_base = optional_field(j, "", "n_base", cfg.n_base, integer);
  cfg.k = optional_field(j, "", "k", cfg.k, integer);
  if (const auto it = j.find("model"); it != j.end()) cfg.model = model_from(*it, "model");
  cfg.methods = methods_from(j, "");
  cfg.replicates = optional_field(j, "", "replicates", cfg.replicates, integer);
  cfg.seed = optional_field(j, "", "seed", cfg.seed, unsigned_integer);
  cfg.settings = settings_from(j, "");
  if (const auto it = j.find("overlap"); it != j.end()) {
    only_keys(*it, "overlap", {"strip_multiplier"});
    cfg.overlap.strip_multiplier =
        optional_field(*it, "overlap", "strip_multiplier", cfg.overlap.strip_multiplier, number);
  }
  validated(cfg);
  return cfg;
}

SizeExperimentConfig size_from(const json& j) {
  only_keys(j, "", {"experiment", "n", "p", "methods", "replicates", "seed", "alpha", "estimators"});
  SizeExperimentConfig cfg;
  cfg.n_grid = integer_grid(need(j, "", "n"), "n");
  cfg.p = integer(need(j, "", "p"), "p");
  cfg.methods = methods_from(j, "");
  cfg.replicates = optional_field(j, "", "replicates", cfg.replicates, integer);
  cfg.seed = optional_field(j, "", "seed", cfg.seed, unsigned_integer);
  cfg.settings = settings_from(j, "");
  validated(cfg);
  return cfg;
}

}  // namespace

ExperimentConfig experiment_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("", "expected a JSON object");
  const json& kind = need(j, "", "experiment");
  if (!kind.is_string()) throw ConfigError("experiment", "expected a string");
  const auto k = kind.get<std::string>();
  if (k == "lambda") return lambda_from(j);
  if (k == "point-grid") return point_grid_from(j);
  if (k == "size") return size_from(j);
  throw ConfigError("experiment", "unknown kind '" + k + "' (lambda, point-grid, size)");
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path + ": " + e.what());
  }
  return experiment_from_json(j);
}

json to_json(const ExperimentConfig& cfg) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        json j;
        if constexpr (std::is_same_v<T, LambdaExperimentConfig>) {
          j["experiment"] = "lambda";
          j["name"] = c.name;
          j["model"] = model_json(c.model);
          j["contamination"] = {{"n1", c.n1},   {"n2", c.n2},
                                {"d", c.d},     {"mu2", c.mu2},
                                {"Sigma", matrix_json(c.Sigma)}, {"lambda", c.lambda_grid}};
          j["overlap"] = {{"strip_multiplier", c.overlap.strip_multiplier}};
        } else if constexpr (std::is_same_v<T, PointGridConfig>) {
          j["experiment"] = "point-grid";
          j["x0"] = c.x0_grid;
          j["y0"] = c.y0_grid;
          j["n_base"] = c.n_base;
          j["k"] = c.k;
          j["model"] = model_json(c.model);
          j["overlap"] = {{"strip_multiplier", c.overlap.strip_multiplier}};
        } else {
          j["experiment"] = "size";
          j["n"] = c.n_grid;
          j["p"] = c.p;
        }
        j["methods"] = methods_json(c.methods);
        j["replicates"] = c.replicates;
        j["seed"] = c.seed;
        j["alpha"] = c.settings.test.alpha;
        j["estimators"] = settings_json(c.settings);
        return j;
      },
      cfg);
}

std::vector<Index> parse_n_grid(const std::string& text) {
  auto to_index = [&](std::string_view s) {
    Index v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
      throw ConfigError("n", "cannot parse '" + std::string(s) + "' as an integer");
    return v;
  };
  std::vector<Index> out;
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) out.push_back(to_index(part));
    return out;
  }
  const std::string_view sv(text);
  const Index from = to_index(sv.substr(0, dots));
  const auto colon = text.find(':', dots);
  const Index to = to_index(sv.substr(dots + 2, colon == std::string::npos ? std::string::npos : colon - dots - 2));
  const Index step = colon == std::string::npos ? from : to_index(sv.substr(colon + 1));
  if (step < 1) throw ConfigError("n", "step must be positive");
  for (Index n = from; n <= to; n += step) out.push_back(n);
  return out;
}

}  // namespace robreg
