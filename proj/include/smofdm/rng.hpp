#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace smofdm {

// splitmix64 finalizer; good avalanche, stable across platforms.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Order-sensitive combination of seed material into a child seed, so
// independent streams (per frame, per detector, per worker) never collide.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return mix64(base ^ mix64(salt));
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view salt);

// Seeded generator with platform-independent draw sequences. The uniform
// and Gaussian conversions are done by hand so two builds with the same
// seed produce bit-identical streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t uniform_below(std::uint64_t n);

  int coin() { return static_cast<int>(engine_() >> 63); }

  // Standard normal via Box-Muller (no cached second deviate).
  double gaussian();

 private:
  std::mt19937_64 engine_;
};

}  // namespace smofdm
