#pragma once

#include "robreg/core.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <cstdint>
#include <initializer_list>

namespace robreg {

/// SplitMix64 finalizer; used to derive engine seeds and stream ids.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Order-sensitive hash of a tuple of integers, for stream ids such as
/// (replicate, lambda index, purpose).
constexpr std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (auto v : parts) h = mix64(h ^ mix64(v));
  return h;
}

/// Reproducible random stream. The engine and distributions are Boost
/// implementations, so a given (seed, stream_id) yields the same draws on any
/// platform.
class RngStream {
 public:
  RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id), engine_(mix64(seed ^ mix64(stream_id))) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Independent child stream sharing the root seed.
  RngStream substream(std::uint64_t key) const { return {seed_, stream_key({stream_id_, key})}; }

  double uniform() { return boost::random::uniform_01<double>{}(engine_); }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal() { return boost::random::normal_distribution<double>{}(engine_); }
  /// Uniform integer in [lo, hi].
  Index integer(Index lo, Index hi) {
    return boost::random::uniform_int_distribution<Index>{lo, hi}(engine_);
  }

  Vector normal_vector(Index k);

  /// `k` distinct indices from [0, n) by a partial Fisher-Yates shuffle of
  /// `scratch`, which must hold a permutation of 0..n-1 (it is left permuted).
  void sample_without_replacement(IndexSet& scratch, Index k, IndexSet& out);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  boost::random::mt19937_64 engine_;
};

}  // namespace robreg
