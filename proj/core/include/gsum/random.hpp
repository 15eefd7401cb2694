#pragma once

#include <cstdint>
#include <limits>

namespace gsum {

/// Counter-based random source.
///
/// Output word i of stream (seed, stream_id) is a fixed function of
/// (seed, stream_id, i): the SplitMix64 finalizer applied to
/// key(seed, stream_id) + (i + 1) * golden_gamma. Streams are addressed
/// directly, so Monte Carlo work can be sharded into chunks with their own
/// stream ids and the result does not depend on how chunks are scheduled.
///
/// Satisfies std::uniform_random_bit_generator.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  explicit RandomSource(std::uint64_t seed, std::uint64_t stream_id = 0,
                        std::uint64_t counter = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    std::uint64_t z = key_ + (++counter_) * kGamma;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal variate (ziggurat).
  double normal();

  /// Independent source for sub-stream `sub` of this stream. Pure function of
  /// (seed, stream_id, sub); does not advance this source.
  [[nodiscard]] RandomSource split(std::uint64_t sub) const noexcept;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_; }
  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_;
  std::uint64_t key_;
};

/// Infinite stream of i.i.d. N(0,1) reals drawn from a RandomSource.
class GaussianStream {
 public:
  explicit GaussianStream(RandomSource rng) noexcept : rng_(rng) {}
  double operator()() { return rng_.normal(); }
  [[nodiscard]] const RandomSource& source() const noexcept { return rng_; }

 private:
  RandomSource rng_;
};

}  // namespace gsum
