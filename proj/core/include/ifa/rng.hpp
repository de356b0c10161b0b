#pragma once

#include <cstdint>
#include <random>

namespace ifa {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for (seed, stream, substream). Streams depend only on
/// these identifiers, never on scheduling.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) {
  const std::uint64_t a = splitmix64(seed ^ 0x6a09e667f3bcc908ULL);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x3c6ef372fe94f82bULL));
  const std::uint64_t c = splitmix64(b ^ splitmix64(substream + 0xa54ff53a5f1d36f1ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

/// Uniform draw on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  // 53 random bits, offset by half a step so 0 and 1 are unreachable.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw by inversion; one engine call per variate.
double standard_normal(Rng& rng);

}  // namespace ifa
