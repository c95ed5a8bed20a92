#include "robreg/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace robreg {

void SubsetConfig::validate() const {
  if (n_elemental < 1 || n_refine < 1 || n_best < 1)
    throw DomainError("subset config: counts must be at least 1");
  if (n_best > n_elemental) throw DomainError("subset config: n_best exceeds n_elemental");
}

namespace {

/// C(n, k), saturating at `cap`.
Index binomial_capped(Index n, Index k, Index cap) {
  k = std::min(k, n - k);
  double acc = 1.0;
  for (Index i = 1; i <= k; ++i) {
    acc = acc * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (acc > static_cast<double>(cap)) return cap + 1;
  }
  return static_cast<Index>(std::llround(acc));
}

}  // namespace

ElementalSubsets::ElementalSubsets(Index n, Index p, Index limit, RngStream rng)
    : n_(n), p_(p), rng_(std::move(rng)) {
  const Index total = binomial_capped(n, p, limit);
  exhaustive_ = total <= limit;
  count_ = exhaustive_ ? total : limit;
  if (exhaustive_) {
    combo_.resize(static_cast<std::size_t>(p));
    std::iota(combo_.begin(), combo_.end(), Index{0});
  } else {
    scratch_.resize(static_cast<std::size_t>(n));
    std::iota(scratch_.begin(), scratch_.end(), Index{0});
  }
}

bool ElementalSubsets::next(IndexSet& out) {
  if (produced_ >= count_) return false;
  if (exhaustive_) {
    out = combo_;
    // Advance to the next combination in lexicographic order.
    Index i = p_ - 1;
    while (i >= 0 && combo_[static_cast<std::size_t>(i)] == n_ - p_ + i) --i;
    if (i >= 0) {
      ++combo_[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < p_; ++j)
        combo_[static_cast<std::size_t>(j)] = combo_[static_cast<std::size_t>(j - 1)] + 1;
    }
  } else {
    rng_.sample_without_replacement(scratch_, p_, out);
  }
  ++produced_;
  return true;
}

void smallest_rows(const Vector& values, Index h, IndexSet& idx) {
  const Index n = values.size();
  idx.resize(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  auto less = [&](Index a, Index b) {
    return values(a) < values(b) || (values(a) == values(b) && a < b);
  };
  if (h < n) {
    std::nth_element(idx.begin(), idx.begin() + h, idx.end(), less);
    idx.resize(static_cast<std::size_t>(h));
  }
  std::sort(idx.begin(), idx.end());
}

IndexSet smallest_rows(const Vector& values, Index h) {
  IndexSet idx;
  smallest_rows(values, h, idx);
  return idx;
}

}  // namespace robreg
