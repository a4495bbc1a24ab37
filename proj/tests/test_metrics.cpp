// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "csifb/metrics.hpp"
#include "csifb/rng.hpp"

using namespace csifb;

namespace {

ChannelTensor tensor_1xN(const std::vector<cxd>& row) {
  ChannelTensor t = ChannelTensor::zeros(static_cast<int>(row.size()), 1, 1);
  for (std::size_t i = 0; i < row.size(); ++i) {
    t.at(static_cast<int>(i), 0, 0) = row[i];
  }
  return t;
}

ChannelTensor random_tensor(int n_tx, int n_rx, RngStream& rng, double power = 1.0) {
  ChannelTensor t = ChannelTensor::zeros(n_tx, n_rx, 1);
  for (cxd& g : t.gains) {
    g = rng.complex_gaussian(power);
  }
  return t;
}

}  // namespace

TEST_CASE("mean_squared_error basics") {
  RngStream rng(1);
  std::vector<ChannelTensor> actual;
  for (int n = 0; n < 5; ++n) {
    actual.push_back(random_tensor(4, 2, rng));
  }
  CHECK(mean_squared_error(actual, actual) == 0.0);

  // Constant scalar offset d: MSE equals |d|^2.
  const cxd d(0.3, -0.4);
  std::vector<ChannelTensor> scalar_actual;
  std::vector<ChannelTensor> scalar_estimated;
  for (int n = 0; n < 7; ++n) {
    ChannelTensor a = ChannelTensor::zeros(1, 1, 1);
    a.gains[0] = rng.complex_gaussian(1.0);
    ChannelTensor e = a;
    e.gains[0] += d;
    scalar_actual.push_back(a);
    scalar_estimated.push_back(e);
  }
  CHECK(mean_squared_error(scalar_actual, scalar_estimated) ==
        Catch::Approx(std::norm(d)).margin(1e-12));
}

TEST_CASE("mean_squared_error equals the elementwise sum oracle") {
  // 2x2 grid, two steps, hand-listed entries.
  ChannelTensor a0 = ChannelTensor::zeros(2, 2, 1);
  a0.gains = {cxd(1, 0), cxd(0, 1), cxd(-1, 0.5), cxd(2, -2)};
  ChannelTensor a1 = ChannelTensor::zeros(2, 2, 1);
  a1.gains = {cxd(0, 0), cxd(1, 1), cxd(0.5, 0), cxd(-1, -1)};
  ChannelTensor e0 = ChannelTensor::zeros(2, 2, 1);
  e0.gains = {cxd(0.9, 0.1), cxd(0, 0.8), cxd(-1.2, 0.5), cxd(2, -1.5)};
  ChannelTensor e1 = ChannelTensor::zeros(2, 2, 1);
  e1.gains = {cxd(0.1, -0.1), cxd(0.9, 1.1), cxd(0.4, 0.1), cxd(-1, -0.9)};

  double expected = 0.0;
  for (int k = 0; k < 4; ++k) {
    expected += std::norm(a0.gains[static_cast<std::size_t>(k)] -
                          e0.gains[static_cast<std::size_t>(k)]);
    expected += std::norm(a1.gains[static_cast<std::size_t>(k)] -
                          e1.gains[static_cast<std::size_t>(k)]);
  }
  expected /= 2.0;

  const std::vector<ChannelTensor> actual{a0, a1};
  const std::vector<ChannelTensor> estimated{e0, e1};
  CHECK(mean_squared_error(actual, estimated) == Catch::Approx(expected).margin(1e-14));

  // Invariant under a simultaneous reordering of the series.
  const std::vector<ChannelTensor> actual_r{a1, a0};
  const std::vector<ChannelTensor> estimated_r{e1, e0};
  CHECK(mean_squared_error(actual_r, estimated_r) ==
        Catch::Approx(mean_squared_error(actual, estimated)).margin(1e-14));

  const std::vector<ChannelTensor> mismatched{a0};
  CHECK_THROWS_AS(mean_squared_error(mismatched, estimated), std::invalid_argument);
}

TEST_CASE("mf_precoder") {
  {
    PrecodingSetup setup{.tx_power = 1.0, .noise_variance = 0.1, .n_tx = 2, .n_rx = 1};
    const ChannelTensor h = tensor_1xN({cxd(1, 0), cxd(0, 0)});
    const MimoMatrix w = mf_precoder(h, setup);
    REQUIRE(w.rows() == 2);
    REQUIRE(w.cols() == 1);
    CHECK(w(0, 0) == cxd(1.0, 0.0));
    CHECK(w(1, 0) == cxd(0.0, 0.0));
  }
  {
    // Conjugate beam: h = [1, i]/sqrt(2) -> w = [1, -i]/sqrt(2).
    PrecodingSetup setup{.tx_power = 1.0, .noise_variance = 0.1, .n_tx = 2, .n_rx = 1};
    const double s = 1.0 / std::sqrt(2.0);
    const ChannelTensor h = tensor_1xN({cxd(s, 0), cxd(0, s)});
    const MimoMatrix w = mf_precoder(h, setup);
    CHECK(std::abs(w(0, 0) - cxd(s, 0.0)) < 1e-12);
    CHECK(std::abs(w(1, 0) - cxd(0.0, -s)) < 1e-12);
  }
  {
    PrecodingSetup setup{.tx_power = 1.0, .noise_variance = 0.1, .n_tx = 4, .n_rx = 2};
    RngStream rng(3);
    for (int i = 0; i < 50; ++i) {
      const ChannelTensor h = random_tensor(4, 2, rng);
      CHECK(mf_precoder(h, setup).norm() == Catch::Approx(1.0).margin(1e-12));
    }
    const ChannelTensor zero = ChannelTensor::zeros(4, 2, 1);
    CHECK_THROWS_AS(mf_precoder(zero, setup), std::invalid_argument);
  }
}

TEST_CASE("received_snr") {
  PrecodingSetup setup{.tx_power = 2.0, .noise_variance = 0.25, .n_tx = 4, .n_rx = 1};
  RngStream rng(4);
  {
    // Matched filter on the true MISO channel: P ||h||^2 / sigma^2.
    const ChannelTensor h = random_tensor(4, 1, rng);
    const MimoMatrix w = mf_precoder(h, setup);
    double h_norm2 = 0.0;
    for (const cxd& g : h.gains) {
      h_norm2 += std::norm(g);
    }
    CHECK(received_snr(h, w, setup) ==
          Catch::Approx(setup.tx_power * h_norm2 / setup.noise_variance).epsilon(1e-12));
  }
  {
    // A beam orthogonal to the channel receives nothing.
    const ChannelTensor h = tensor_1xN({cxd(1, 0), cxd(0, 0), cxd(0, 0), cxd(0, 0)});
    MimoMatrix w = MimoMatrix::Zero(4, 1);
    w(1, 0) = cxd(1.0, 0.0);
    CHECK(received_snr(h, w, setup) == Catch::Approx(0.0).margin(1e-15));
  }
  {
    // Quadratic in the channel amplitude.
    const ChannelTensor h = random_tensor(4, 1, rng);
    const MimoMatrix w = mf_precoder(h, setup);
    ChannelTensor h2 = h;
    for (cxd& g : h2.gains) {
      g *= 2.0;
    }
    CHECK(received_snr(h2, w, setup) ==
          Catch::Approx(4.0 * received_snr(h, w, setup)).epsilon(1e-12));
  }
  {
    PrecodingSetup zero_noise = setup;
    zero_noise.noise_variance = 0.0;
    const ChannelTensor h = random_tensor(4, 1, rng);
    CHECK(std::isinf(received_snr(h, mf_precoder(h, zero_noise), zero_noise)));
  }
}

TEST_CASE("matched filter is optimal among random precoders under perfect CSI") {
  PrecodingSetup setup{.tx_power = 1.0, .noise_variance = 0.1, .n_tx = 4, .n_rx = 1};
  RngStream rng(5);
  const ChannelTensor h = random_tensor(4, 1, rng);
  const double mf_snr = received_snr(h, mf_precoder(h, setup), setup);
  for (int i = 0; i < 1000; ++i) {
    MimoMatrix w(4, 1);
    for (int r = 0; r < 4; ++r) {
      w(r, 0) = rng.complex_gaussian(1.0);
    }
    w /= w.norm();
    CHECK(received_snr(h, w, setup) <= mf_snr + 1e-9);
  }
}

TEST_CASE("better estimates give higher SNR and lower MSE") {
  PrecodingSetup setup{.tx_power = 1.0, .noise_variance = 0.1, .n_tx = 4, .n_rx = 2};
  RngStream rng(6);
  double snr_perfect = 0.0;
  double snr_noisy = 0.0;
  double mse_perfect = 0.0;
  double mse_noisy = 0.0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    const ChannelTensor h = random_tensor(4, 2, rng);
    ChannelTensor noisy = h;
    for (cxd& g : noisy.gains) {
      g += rng.complex_gaussian(0.5);
    }
    snr_perfect += received_snr(h, mf_precoder(h, setup), setup);
    snr_noisy += received_snr(h, mf_precoder(noisy, setup), setup);
    const std::vector<ChannelTensor> actual{h};
    const std::vector<ChannelTensor> as_perfect{h};
    const std::vector<ChannelTensor> as_noisy{noisy};
    mse_perfect += mean_squared_error(actual, as_perfect);
    mse_noisy += mean_squared_error(actual, as_noisy);
  }
  CHECK(snr_perfect / trials >= snr_noisy / trials);
  CHECK(mse_perfect / trials < mse_noisy / trials);
}

TEST_CASE("snr_gain_percent") {
  CHECK(snr_gain_percent(1.17, 1.0) == Catch::Approx(17.0).margin(1e-12));
  CHECK(snr_gain_percent(0.8, 0.8) == 0.0);
  CHECK(snr_gain_percent(2.0, 1.0) == Catch::Approx(100.0));
  CHECK_THROWS_AS(snr_gain_percent(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(snr_gain_percent(1.0, -2.0), std::domain_error);
}
