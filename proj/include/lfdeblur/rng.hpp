#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "lfdeblur/error.hpp"

namespace lfdeblur {

// Deterministic RNG with a serializable state so training runs can be
// checkpointed and resumed bit-exactly. splitmix64 core; identical output on
// every platform.
class DetRng {
 public:
  explicit DetRng(uint64_t seed = 0) : state_(seed), cached_(false), cache_(0.0) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    if (n == 0) throw Error("DetRng::below: n must be positive");
    // Rejection sampling keeps the draw unbiased.
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  // Standard normal via Box-Muller; second value cached.
  double normal() {
    if (cached_) {
      cached_ = false;
      return cache_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cache_ = r * std::sin(a);
    cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // State round-trips through three integers (splitmix state + normal cache).
  struct State {
    uint64_t state;
    uint8_t cached;
    double cache;
  };

  State save() const { return State{state_, uint8_t(cached_ ? 1 : 0), cache_}; }

  void restore(const State& s) {
    state_ = s.state;
    cached_ = s.cached != 0;
    cache_ = s.cache;
  }

 private:
  uint64_t state_;
  bool cached_;
  double cache_;
};

// Stable way to derive independent streams (per worker, per purpose).
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed ^ (0x9e3779b97f4a7c15ull * (stream + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace lfdeblur
