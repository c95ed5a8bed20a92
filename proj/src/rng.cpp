#include "robreg/rng.hpp"

#include <utility>

namespace robreg {

Vector RngStream::normal_vector(Index k) {
  Vector v(k);
  for (Index i = 0; i < k; ++i) v(i) = normal();
  return v;
}

void RngStream::sample_without_replacement(IndexSet& scratch, Index k, IndexSet& out) {
  const auto n = static_cast<Index>(scratch.size());
  out.resize(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) {
    const Index j = integer(i, n - 1);
    std::swap(scratch[static_cast<std::size_t>(i)], scratch[static_cast<std::size_t>(j)]);
    out[static_cast<std::size_t>(i)] = scratch[static_cast<std::size_t>(i)];
  }
}

}  // namespace robreg
