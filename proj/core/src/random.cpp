#include "gsum/random.hpp"

#include <boost/random/normal_distribution.hpp>

namespace gsum {
namespace {

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) noexcept {
  // Two rounds so that neighbouring (seed, stream) pairs land far apart.
  return mix64(mix64(seed + 0x632be59bd9b4e019ull) ^ (stream * 0xd1b54a32d192ed03ull + 1));
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream_id,
                           std::uint64_t counter) noexcept
    : seed_(seed), stream_(stream_id), counter_(counter), key_(derive_key(seed, stream_id)) {}

double RandomSource::normal() {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(*this);
}

RandomSource RandomSource::split(std::uint64_t sub) const noexcept {
  return RandomSource(seed_, mix64(stream_ ^ 0x5851f42d4c957f2dull) + sub);
}

}  // namespace gsum
