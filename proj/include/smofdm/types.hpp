#pragma once

#include <Eigen/Dense>
#include <complex>

namespace smofdm {

using cxd = std::complex<double>;

using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using VecD = Eigen::VectorXd;
using MatD = Eigen::MatrixXd;

// Read-only vector argument that also binds row/column expressions.
using VecCRef = Eigen::Ref<const VecC, 0, Eigen::InnerStride<>>;
using VecDRef = Eigen::Ref<const VecD, 0, Eigen::InnerStride<>>;

// One SM-OFDM symbol: row = transmit antenna, column = subcarrier.
// Data grids carry exactly one nonzero entry per column; pilot grids may
// leave columns outside the pilot set all-zero.
using SmSymbolGrid = MatC;

}  // namespace smofdm
