#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "smofdm/errors.hpp"
#include "smofdm/numerics.hpp"
#include "smofdm/rng.hpp"

using namespace smofdm;

namespace {

// Independent O(N^2) oracle for the unitary DFT.
VecC dft_oracle(const VecC& x) {
  const Eigen::Index n = x.size();
  VecC out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    cxd acc(0.0, 0.0);
    for (Eigen::Index m = 0; m < n; ++m) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(m) / static_cast<double>(n);
      acc += x[m] * cxd(std::cos(ang), std::sin(ang));
    }
    out[k] = acc / std::sqrt(static_cast<double>(n));
  }
  return out;
}

VecC random_vec(Rng& rng, Eigen::Index n) {
  VecC v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = cxd(2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0);
  }
  return v;
}

}  // namespace

TEST_CASE("fft of a delta is flat with unitary scaling") {
  VecC x = VecC::Zero(4);
  x[0] = 1.0;
  const VecC y = fft(x);
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(y[k] - cxd(0.5, 0.0)) < 1e-15);
  }
}

TEST_CASE("fft of a constant concentrates on DC") {
  VecC x = VecC::Constant(4, cxd(1.0, 0.0));
  const VecC y = fft(x);
  CHECK(std::abs(y[0] - cxd(2.0, 0.0)) < 1e-15);
  for (int k = 1; k < 4; ++k) CHECK(std::abs(y[k]) < 1e-15);
}

TEST_CASE("fft matches the direct DFT oracle") {
  Rng rng(7);
  for (Eigen::Index n : {2, 4, 8, 16}) {
    const VecC x = random_vec(rng, n);
    const VecC fast = fft(x);
    const VecC slow = dft_oracle(x);
    CHECK((fast - slow).cwiseAbs().maxCoeff() / slow.cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("fft rejects non-power-of-two lengths") {
  CHECK_THROWS_AS((void)fft(VecC::Zero(3)), config_error);
  CHECK_THROWS_AS((void)fft(VecC::Zero(0)), config_error);
  CHECK_THROWS_AS((void)ifft(VecC::Zero(12)), config_error);
}

TEST_CASE("ifft inverts the constant and delta cases") {
  VecC x = VecC::Zero(4);
  x[0] = 2.0;
  const VecC t = ifft(x);
  for (int n = 0; n < 4; ++n) CHECK(std::abs(t[n] - cxd(1.0, 0.0)) < 1e-15);

  VecC half = VecC::Constant(4, cxd(0.5, 0.0));
  const VecC d = ifft(half);
  CHECK(std::abs(d[0] - cxd(1.0, 0.0)) < 1e-15);
  for (int n = 1; n < 4; ++n) CHECK(std::abs(d[n]) < 1e-15);
}

TEST_CASE("roundtrip and Parseval over all power-of-two lengths up to 1024") {
  Rng rng(21);
  for (Eigen::Index n = 2; n <= 1024; n <<= 1) {
    const VecC x = random_vec(rng, n);
    const VecC X = fft(x);
    CHECK((ifft(X) - x).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(X.norm() - x.norm()) / x.norm() < 1e-9);
  }
}

TEST_CASE("add_cp copies the tail in front") {
  VecC x(4);
  x << cxd(1, 0), cxd(2, 0), cxd(3, 0), cxd(4, 0);
  const VecC y = add_cp(x, 2);
  REQUIRE(y.size() == 6);
  CHECK(y[0] == x[2]);
  CHECK(y[1] == x[3]);
  CHECK(y.tail(4) == x);

  CHECK(add_cp(x, 0) == x);
  CHECK_THROWS_AS((void)add_cp(x, 5), config_error);
}

TEST_CASE("add_cp at the frame dimensions") {
  Rng rng(3);
  const VecC x = random_vec(rng, 64);
  const VecC y = add_cp(x, 16);
  REQUIRE(y.size() == 80);
  CHECK(y.head(16) == x.tail(16));
  CHECK(y.tail(64) == x);
  CHECK(remove_cp(y, 16) == x);
}

TEST_CASE("remove_cp drops the prefix and inverts add_cp") {
  VecC x(6);
  x << cxd(3, 0), cxd(4, 0), cxd(1, 0), cxd(2, 0), cxd(3, 0), cxd(4, 0);
  const VecC y = remove_cp(x, 2);
  REQUIRE(y.size() == 4);
  CHECK(y[0] == cxd(1, 0));
  CHECK(y[3] == cxd(4, 0));

  Rng rng(5);
  for (Eigen::Index cp = 0; cp <= 8; ++cp) {
    const VecC v = random_vec(rng, 8);
    CHECK(remove_cp(add_cp(v, cp), cp) == v);
  }
  CHECK_THROWS_AS((void)remove_cp(VecC::Zero(4), 4), framing_error);
  CHECK_THROWS_AS((void)remove_cp(VecC::Zero(4), 7), framing_error);
}

TEST_CASE("complex gaussian sampling moments and determinism") {
  Rng rng(42);
  CHECK(sample_complex_gaussian(rng, 0.0) == cxd(0.0, 0.0));
  CHECK_THROWS_AS((void)sample_complex_gaussian(rng, -1.0), config_error);

  const int n = 1000000;
  cxd mean(0.0, 0.0);
  double power = 0.0;
  for (int i = 0; i < n; ++i) {
    const cxd z = sample_complex_gaussian(rng, 1.0);
    mean += z;
    power += std::norm(z);
  }
  mean /= static_cast<double>(n);
  power /= static_cast<double>(n);
  CHECK(std::abs(mean) < 0.005);
  CHECK(power == doctest::Approx(1.0).epsilon(0.01));

  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) {
    CHECK(sample_complex_gaussian(a, 2.0) == sample_complex_gaussian(b, 2.0));
  }
}
