#pragma once

#include <cstdint>

namespace stoctrl {

/// Counter-based random primitives. Every draw is a pure function of its
/// key, so generation order (and thread scheduling) cannot change results.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
}

inline std::uint64_t key_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) {
  std::uint64_t h = splitmix64(seed);
  h = hash_combine(h, a);
  h = hash_combine(h, b);
  h = hash_combine(h, c);
  return h;
}

/// Uniform double in [0, 1) from 53 mantissa bits. Identical on every
/// platform, unlike std:: distributions.
inline double u01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double keyed_u01(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                        std::uint64_t c) {
  return u01(key_hash(seed, a, b, c));
}

/// Tiny sequential stream for test utilities that do not need keyed access.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform() { return u01(next()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

}  // namespace stoctrl
