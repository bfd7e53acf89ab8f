#include "smofdm/rng.hpp"

#include <cmath>
#include <numbers>

namespace smofdm {

std::uint64_t derive_seed(std::uint64_t base, std::string_view salt) {
  // FNV-1a over the label, then mixed into the base stream.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : salt) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return derive_seed(base, h);
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  const std::uint64_t limit = n * (UINT64_MAX / n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::gaussian() {
  const double u1 = uniform_pos();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace smofdm
