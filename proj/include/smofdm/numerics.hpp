#pragma once

#include "smofdm/rng.hpp"
#include "smofdm/types.hpp"

namespace smofdm {

constexpr bool is_pow2(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

// Unitary DFT: X[k] = (1/sqrt(N)) sum_n x[n] e^{-j2pi kn/N}.
// Length must be a power of two.
VecC fft(const VecCRef& x);

// Unitary inverse DFT; exact inverse of fft under the same scaling.
VecC ifft(const VecCRef& x);

// Prepend the last cp_len samples of x (cyclic prefix).
VecC add_cp(const VecCRef& x, Eigen::Index cp_len);

// Drop the first cp_len samples.
VecC remove_cp(const VecCRef& x, Eigen::Index cp_len);

// Circularly-symmetric complex Gaussian CN(0, variance): real and imaginary
// parts independent with variance/2 each. variance = 0 yields exactly zero.
cxd sample_complex_gaussian(Rng& rng, double variance);

}  // namespace smofdm
