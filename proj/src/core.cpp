#include "robreg/core.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>

namespace robreg {

Dataset::Dataset(Vector y_, Matrix X_, std::vector<Source> source_)
    : y(std::move(y_)), X(std::move(X_)), source(std::move(source_)) {}

Index Dataset::count(Source s) const {
  return static_cast<Index>(std::count(source.begin(), source.end(), s));
}

void Dataset::validate() const {
  if (X.rows() != y.size()) throw DomainError("dataset: X rows differ from length of y");
  if (p() < 1) throw DomainError("dataset: p must be at least 1");
  if (n() < p()) throw DomainError("dataset: n < p");
  if (!X.allFinite() || !y.allFinite()) throw DomainError("dataset: non-finite entries");
  if (has_source() && static_cast<Index>(source.size()) != n())
    throw DomainError("dataset: source labels do not match n");
}

Dataset Dataset::rows(const IndexSet& idx) const {
  Dataset out;
  out.y.resize(static_cast<Index>(idx.size()));
  out.X.resize(static_cast<Index>(idx.size()), X.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto i = idx[k];
    out.y(static_cast<Index>(k)) = y(i);
    out.X.row(static_cast<Index>(k)) = X.row(i);
    if (has_source()) out.source.push_back(source[static_cast<std::size_t>(i)]);
  }
  return out;
}

Dataset Dataset::head(Index m) const {
  Dataset out{y.head(m), X.topRows(m), {}};
  if (has_source()) out.source.assign(source.begin(), source.begin() + m);
  return out;
}

Vector TrueModel::coefficients() const {
  Vector b(beta.size() + 1);
  b(0) = alpha;
  b.tail(beta.size()) = beta;
  return b;
}

DesignRegion TrueModel::region_of(Index j) const {
  if (region.empty()) throw DomainError("true model: no design region");
  if (region.size() == 1) return region.front();
  return region.at(static_cast<std::size_t>(j));
}

Vector TrueModel::carrier_mean() const {
  Vector mu(beta.size());
  for (Index j = 0; j < beta.size(); ++j) {
    const auto r = region_of(j);
    mu(j) = 0.5 * (r.a + r.b);
  }
  return mu;
}

void TrueModel::validate() const {
  if (!(sigma_eps > 0.0)) throw DomainError("true model: sigma_eps must be positive");
  if (region.size() != 1 && static_cast<Index>(region.size()) != beta.size())
    throw DomainError("true model: region must have one entry or one per slope");
  for (const auto& r : region)
    if (!(r.a < r.b)) throw DomainError("true model: design region needs a < b");
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::OLS: return "OLS";
    case Method::FS: return "FS";
    case Method::LTS: return "LTS";
    case Method::LTSR: return "LTSR";
    case Method::S: return "S";
    case Method::MM: return "MM";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  std::string u(s);
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  if (u == "OLS") return Method::OLS;
  if (u == "FS") return Method::FS;
  if (u == "LTS") return Method::LTS;
  if (u == "LTSR") return Method::LTSR;
  if (u == "S") return Method::S;
  if (u == "MM") return Method::MM;
  throw DomainError("unknown method '" + std::string(s) + "'");
}

Index FitResult::flagged_count() const {
  return static_cast<Index>(std::count(outlier_flags.begin(), outlier_flags.end(), true));
}

double TestConfig::cutoff(Index n) const {
  static const boost::math::normal_distribution<double> z;
  return boost::math::quantile(z, 1.0 - alpha_star(n) / 2.0);
}

void TestConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("test: alpha must lie in (0, 1)");
}

}  // namespace robreg
