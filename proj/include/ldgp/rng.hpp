#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ldgp {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed keyed by a path of integers, e.g. (node, iteration). Streams with
// different keys are independent of each other and of call order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return Rng(derive_seed(seed, keys));
}

inline double uniform01(Rng& rng) {
  // (0,1) open interval: log(u) stays finite.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

}  // namespace ldgp
