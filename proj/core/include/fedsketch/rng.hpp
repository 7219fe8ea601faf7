#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace fedsketch::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

/// 64-bit multiply-xorshift finalizer (murmur3 constants). Bijective, so
/// distinct inputs never collide.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdull;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ull;
  x ^= x >> 33;
  return x;
}

/// Derives an independent stream seed from a base seed plus up to three
/// labels (purpose tag, round, device, ...). Used everywhere a component
/// needs its own reproducible randomness.
constexpr std::uint64_t derive(std::uint64_t base, std::uint64_t tag,
                               std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = mix64(base + kGolden);
  h = mix64(h ^ (tag + kGolden));
  h = mix64(h ^ (a + kGolden));
  h = mix64(h ^ (b + kGolden));
  return h;
}

/// splitmix64 generator. Chosen over std engines for the distributions so
/// the exact draw sequence is identical on every platform and toolchain.
class Engine {
 public:
  explicit constexpr Engine(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += kGolden);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform integer in [0, bound); bound must be >= 1.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (~bound + 1) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log1p(-u1));
    return radius * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Laplace(0, scale) by inverse CDF.
  double laplace(double scale) {
    for (;;) {
      const double u = uniform01() - 0.5;
      const double tail = 1.0 - 2.0 * std::abs(u);
      if (tail <= 0.0) continue;  // u == -0.5 would hit log(0)
      const double magnitude = -scale * std::log(tail);
      return u < 0.0 ? -magnitude : magnitude;
    }
  }

 private:
  std::uint64_t state_;
};

/// In-place Fisher-Yates shuffle driven by an Engine.
template <typename T>
void shuffle(std::vector<T>& items, Engine& eng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    using std::swap;
    swap(items[i - 1], items[eng.below(i)]);
  }
}

}  // namespace fedsketch::rng
