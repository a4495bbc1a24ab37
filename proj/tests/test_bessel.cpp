// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "csifb/bessel.hpp"
#include "oracles.hpp"

using csifb::bessel_j0;

TEST_CASE("bessel_j0 fixed values") {
  CHECK(bessel_j0(0.0) == 1.0);
  // Frozen from the series oracle.
  CHECK(bessel_j0(1.0) == Catch::Approx(0.7651976865579666).margin(1e-12));
  CHECK(oracle::j0_series(1.0) == Catch::Approx(0.7651976865579666).margin(1e-14));
  // First positive root.
  CHECK(std::abs(bessel_j0(2.4048255577)) < 1e-8);
}

TEST_CASE("bessel_j0 first root located by bisection on the series oracle") {
  double lo = 2.0;
  double hi = 3.0;
  REQUIRE(oracle::j0_series(lo) > 0.0);
  REQUIRE(oracle::j0_series(hi) < 0.0);
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (oracle::j0_series(mid) > 0.0 ? lo : hi) = mid;
  }
  CHECK(0.5 * (lo + hi) == Catch::Approx(2.4048255577).margin(1e-8));
}

TEST_CASE("bessel_j0 matches independent oracles across the working range") {
  // Series oracle where the series is numerically safe.
  for (double x = -10.0; x <= 10.0; x += 0.037) {
    CHECK(std::abs(bessel_j0(x) - oracle::j0_series(x)) < 1e-12);
  }
  // Quadrature oracle across the full contract range.
  double worst = 0.0;
  for (double x = -100.0; x <= 100.0; x += 0.23) {
    worst = std::max(worst, std::abs(bessel_j0(x) - oracle::j0_quadrature(x)));
  }
  CHECK(worst < 1e-10);
  // The two oracles also agree with each other.
  for (double x = 0.0; x <= 10.0; x += 0.61) {
    CHECK(std::abs(oracle::j0_series(x) - oracle::j0_quadrature(x)) < 1e-12);
  }
}

TEST_CASE("bessel_j0 rejects non-finite input") {
  CHECK_THROWS_AS(bessel_j0(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
  CHECK_THROWS_AS(bessel_j0(std::numeric_limits<double>::infinity()), std::domain_error);
}
