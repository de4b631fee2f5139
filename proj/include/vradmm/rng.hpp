#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "vradmm/vec.hpp"

namespace vradmm {

// Deterministic seeded random source. The (seed, stream) pair fully
// determines the draw sequence: the engine is a single-value-seeded
// mt19937_64 (whose output sequence the standard pins down) and every
// derived draw below avoids implementation-defined distributions.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), engine_(mix(mix(seed) ^ mix(stream + 0x9e3779b97f4a7c15ull))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, n). Bitmask rejection, exactly uniform.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("SeededRng::uniform_index: n == 0");
    if (n == 1) return 0;
    const int zeros = __builtin_clzll(n - 1);
    const std::uint64_t mask = ~0ull >> zeros;
    for (;;) {
      const std::uint64_t v = engine_() & mask;
      if (v < n) return v;
    }
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller, one cached mate per pair.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  void fill_normal(Vector& v) {
    for (double& x : v) x = normal();
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// b indices drawn i.i.d. uniformly with replacement from {0, ..., n-1}.
inline std::vector<std::uint32_t> sample_minibatch(SeededRng& rng, std::size_t n, std::size_t b) {
  if (n == 0) throw std::invalid_argument("sample_minibatch: empty sample universe");
  if (b == 0) throw std::invalid_argument("sample_minibatch: batch size must be >= 1");
  std::vector<std::uint32_t> idx(b);
  for (std::size_t i = 0; i < b; ++i) idx[i] = static_cast<std::uint32_t>(rng.uniform_index(n));
  return idx;
}

}  // namespace vradmm
