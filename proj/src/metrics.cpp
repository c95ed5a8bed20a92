#include "robreg/metrics.hpp"

#include "robreg/biweight.hpp"

#include <algorithm>
#include <cmath>

namespace robreg {

InformationMatrix InformationMatrix::analytic_uniform(const TrueModel& model) {
  const Index k = model.slopes();
  const Vector mu = model.carrier_mean();
  InformationMatrix out;
  out.I.resize(k + 1, k + 1);
  out.I(0, 0) = 1.0;
  out.I.block(0, 1, 1, k) = mu.transpose();
  out.I.block(1, 0, k, 1) = mu;
  out.I.bottomRightCorner(k, k) = mu * mu.transpose();
  for (Index j = 0; j < k; ++j) {
    const auto r = model.region_of(j);
    out.I(j + 1, j + 1) = (r.a * r.a + r.a * r.b + r.b * r.b) / 3.0;
  }
  out.source = Source::AnalyticUniform;
  return out;
}

InformationMatrix InformationMatrix::empirical(const Dataset& data) {
  InformationMatrix out;
  out.I = Matrix::Zero(data.p(), data.p());
  Index used = 0;
  for (Index i = 0; i < data.n(); ++i) {
    if (data.has_source() && data.source[static_cast<std::size_t>(i)] != robreg::Source::M1) continue;
    out.I.noalias() += data.X.row(i).transpose() * data.X.row(i);
    ++used;
  }
  if (used == 0) throw DomainError("information matrix: no M1 rows");
  out.I /= static_cast<double>(used);
  out.source = Source::Empirical;
  return out;
}

double bias_norm(const Vector& beta_hat, const Vector& beta_true, const InformationMatrix& info) {
  if (beta_hat.size() != beta_true.size() || info.I.rows() != beta_hat.size())
    throw DomainError("bias_norm: dimension mismatch");
  const Vector d = beta_hat - beta_true;
  return std::sqrt(std::max(0.0, d.dot(info.I * d)));
}

std::vector<CoefSummary> accumulate(const std::vector<Vector>& estimates, const Vector& truth) {
  if (estimates.size() < 2) throw DomainError("accumulate: need at least two replicates");
  const auto R = static_cast<Index>(estimates.size());
  const Index p = truth.size();
  std::vector<CoefSummary> out(static_cast<std::size_t>(p));
  Vector col(R);
  for (Index j = 0; j < p; ++j) {
    for (Index r = 0; r < R; ++r) col(r) = estimates[static_cast<std::size_t>(r)](j);
    auto& s = out[static_cast<std::size_t>(j)];
    s.mean = col.mean();
    s.sq_bias = (s.mean - truth(j)) * (s.mean - truth(j));
    s.variance = (col.array() - s.mean).square().sum() / static_cast<double>(R - 1);
    const double med = median(col);
    s.mad = median((col.array() - med).abs().matrix());
    s.se_mean = std::sqrt(s.variance / static_cast<double>(R));
  }
  return out;
}

std::vector<double> partial_sums(const std::vector<double>& values) {
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) out[k] = acc += values[k];
  return out;
}

Index power_count(const std::vector<bool>& flags, const Dataset& data) {
  if (static_cast<Index>(flags.size()) != data.n()) throw DomainError("power: flags do not match rows");
  Index hits = 0;
  for (Index i = 0; i < data.n(); ++i)
    hits += flags[static_cast<std::size_t>(i)] && data.source[static_cast<std::size_t>(i)] == Source::M2;
  return hits;
}

double power_fraction(const std::vector<bool>& flags, const Dataset& data) {
  const Index n2 = data.count(Source::M2);
  if (n2 == 0) throw DomainError("power: no M2 rows, power is undefined");
  return static_cast<double>(power_count(flags, data)) / static_cast<double>(n2);
}

SizeEstimate size_estimate(const std::vector<bool>& any_flag) {
  if (any_flag.empty()) throw DomainError("size: no replicates");
  SizeEstimate s;
  s.replicates = static_cast<Index>(any_flag.size());
  s.size = static_cast<double>(std::count(any_flag.begin(), any_flag.end(), true)) / static_cast<double>(s.replicates);
  s.se = std::sqrt(s.size * (1.0 - s.size) / static_cast<double>(s.replicates));
  return s;
}

}  // namespace robreg
