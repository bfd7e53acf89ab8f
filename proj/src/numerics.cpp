#include "smofdm/numerics.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "smofdm/errors.hpp"

namespace smofdm {

namespace {

void bit_reverse_permute(VecC& v) {
  const Eigen::Index n = v.size();
  for (Eigen::Index i = 1, j = 0; i < n; ++i) {
    Eigen::Index bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(v[i], v[j]);
  }
}

// Iterative radix-2 decimation-in-time transform with 1/sqrt(N) scaling.
// sign = -1 gives the forward DFT, +1 the inverse.
VecC transform_pow2(const VecCRef& x, double sign) {
  const Eigen::Index n = x.size();
  if (!is_pow2(n)) {
    throw config_error("fft: length must be a positive power of two, got " +
                       std::to_string(n));
  }
  VecC v = x;
  bit_reverse_permute(v);
  for (Eigen::Index len = 2; len <= n; len <<= 1) {
    const cxd wlen =
        std::polar(1.0, sign * 2.0 * std::numbers::pi / static_cast<double>(len));
    for (Eigen::Index base = 0; base < n; base += len) {
      cxd w(1.0, 0.0);
      for (Eigen::Index j = 0; j < len / 2; ++j) {
        const cxd u = v[base + j];
        const cxd t = w * v[base + j + len / 2];
        v[base + j] = u + t;
        v[base + j + len / 2] = u - t;
        w *= wlen;
      }
    }
  }
  v *= 1.0 / std::sqrt(static_cast<double>(n));
  return v;
}

}  // namespace

VecC fft(const VecCRef& x) { return transform_pow2(x, -1.0); }

VecC ifft(const VecCRef& x) { return transform_pow2(x, +1.0); }

VecC add_cp(const VecCRef& x, Eigen::Index cp_len) {
  const Eigen::Index n = x.size();
  if (cp_len < 0 || cp_len > n) {
    throw config_error("add_cp: cp_len " + std::to_string(cp_len) +
                       " outside [0, " + std::to_string(n) + "]");
  }
  VecC out(n + cp_len);
  out.head(cp_len) = x.tail(cp_len);
  out.tail(n) = x;
  return out;
}

VecC remove_cp(const VecCRef& x, Eigen::Index cp_len) {
  if (cp_len < 0 || x.size() <= cp_len) {
    throw framing_error("remove_cp: stream of length " +
                        std::to_string(x.size()) +
                        " cannot carry a prefix of " + std::to_string(cp_len));
  }
  return x.tail(x.size() - cp_len);
}

cxd sample_complex_gaussian(Rng& rng, double variance) {
  if (variance < 0.0) {
    throw config_error("sample_complex_gaussian: negative variance");
  }
  if (variance == 0.0) return cxd(0.0, 0.0);
  // One Box-Muller pair covers both quadrature components.
  const double r = std::sqrt(-variance * std::log(rng.uniform_pos()));
  const double phi = 2.0 * std::numbers::pi * rng.uniform01();
  return cxd(r * std::cos(phi), r * std::sin(phi));
}

}  // namespace smofdm
