// SPDX-License-Identifier: Apache-2.0
//
// Shared scalar and matrix aliases for the csifb library.

#pragma once

#include <complex>

#include <Eigen/Dense>

namespace csifb {

using cxd = std::complex<double>;

/// Autoregressive model orders are small in practice. Fixed-capacity
/// matrices keep the per-step filter arithmetic off the heap while the
/// order itself stays a runtime value.
inline constexpr int max_ar_order = 16;

using ArMatrix =
    Eigen::Matrix<cxd, Eigen::Dynamic, Eigen::Dynamic, 0, max_ar_order, max_ar_order>;
using ArVector = Eigen::Matrix<cxd, Eigen::Dynamic, 1, 0, max_ar_order, 1>;
using ArRow = Eigen::Matrix<cxd, 1, Eigen::Dynamic, Eigen::RowMajor, 1, max_ar_order>;

/// Antenna counts stay single-digit; per-subcarrier channel matrices fit
/// in fixed-capacity storage as well.
inline constexpr int max_antennas = 8;

using MimoMatrix =
    Eigen::Matrix<cxd, Eigen::Dynamic, Eigen::Dynamic, 0, max_antennas, max_antennas>;

}  // namespace csifb
