#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace cyclolms {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; a cheap bijective mixer for deriving stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the independent stream number `index` under `base`. Depends only on
/// (base, index), so results do not depend on which thread runs a stream.
inline std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(mix64(base) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_stream(std::uint64_t base, std::uint64_t index) {
  return Rng(stream_seed(base, index));
}

/// Zero-mean proper complex Gaussian with unit variance, E|z|^2 = 1.
inline std::complex<double> complex_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

}  // namespace cyclolms
