// Deterministic random numbers and stable 64-bit hashing.
//
// std::mt19937_64 is fully specified by the standard, but the standard
// *distributions* are not; everything derived from raw engine output is
// hand-rolled here so that a given seed yields the same stream on every
// platform and standard library.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace gtpn {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// FNV-1a; used for config hashes and WL color mixing. Stable across builds.
inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Order-sensitive combine for hashing tuples of integers.
inline uint64_t hash_combine(uint64_t seed, uint64_t v) {
  return splitmix64(seed ^ (v + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2)));
}

inline std::string hash_hex(uint64_t h) {
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = "0123456789abcdef"[h & 0xf];
    h >>= 4;
  }
  return s;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of randomness.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo bias is irrelevant at our n and keeps
  // the draw count per call fixed (one), which matters for reproducibility.
  int below(int n) { return static_cast<int>(engine_() % static_cast<uint64_t>(n)); }

  int range(int lo, int hi_inclusive) { return lo + below(hi_inclusive - lo + 1); }

  bool bernoulli(double p) { return uniform() < p; }

  // Independent child stream derived from the *seed*, not the current state:
  // forked streams depend only on (seed, salt), never on how much of the
  // parent stream was consumed, so per-record generators are order-free.
  Rng fork(uint64_t salt) const { return Rng(splitmix64(seed_ ^ splitmix64(salt ^ 0x5851f42d4c957f2dull))); }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace gtpn
