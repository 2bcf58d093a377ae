#pragma once

#include <cstdint>
#include <initializer_list>

namespace crystclr {

/// SplitMix64 stream. The draw sequence depends only on the seed, so runs
/// are reproducible across compilers and platforms (no std:: distributions).
///
/// A stream is advanced in place and must not be shared between threads;
/// use derive() to hand independent streams to parallel tasks.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : seed_(seed), state_(seed) {}

  /// Stream keyed by (seed, k0, k1, ...), e.g. (seed, epoch, batch, position).
  static RngStream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n); n must be positive. Unbiased (rejection).
  std::uint64_t uniform_index(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

/// The SplitMix64 output function.
std::uint64_t mix64(std::uint64_t x);

}  // namespace crystclr
