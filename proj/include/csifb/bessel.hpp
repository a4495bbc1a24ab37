// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>

namespace csifb {

/// Zeroth-order Bessel function of the first kind, J0(x).
inline double bessel_j0(double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("bessel_j0: argument must be finite");
  }
  // J0 is even; the standard library implementation wants x >= 0.
  return std::cyl_bessel_j(0.0, std::abs(x));
}

}  // namespace csifb
