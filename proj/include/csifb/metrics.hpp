// SPDX-License-Identifier: Apache-2.0
//
// Run evaluation: channel mean-squared error, matched-filter precoding and
// the received SNR it yields on the true channel.

#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "csifb/fading.hpp"
#include "csifb/types.hpp"

namespace csifb {

struct PrecodingSetup {
  double tx_power = 1.0;
  double noise_variance = 0.1;
  int n_tx = 4;
  int n_rx = 2;
};

/// Time-averaged squared Frobenius distance between the true and the
/// estimated channel series.
inline double mean_squared_error(std::span<const ChannelTensor> actual,
                                 std::span<const ChannelTensor> estimated) {
  if (actual.size() != estimated.size() || actual.empty()) {
    throw std::invalid_argument("mean_squared_error: series must be nonempty and equal length");
  }
  double acc = 0.0;
  for (std::size_t n = 0; n < actual.size(); ++n) {
    const ChannelTensor& a = actual[n];
    const ChannelTensor& e = estimated[n];
    if (a.gains.size() != e.gains.size() || a.n_tx != e.n_tx || a.n_rx != e.n_rx ||
        a.n_subcarriers != e.n_subcarriers) {
      throw std::invalid_argument("mean_squared_error: tensor dimensions differ");
    }
    for (std::size_t k = 0; k < a.gains.size(); ++k) {
      acc += std::norm(a.gains[k] - e.gains[k]);
    }
  }
  return acc / static_cast<double>(actual.size());
}

/// Matched-filter precoder from the estimated channel of one subcarrier:
/// W = H^H / ||H||_F, so ||W||_F = 1 and total transmit power is fixed.
inline MimoMatrix mf_precoder(const ChannelTensor& estimated, const PrecodingSetup& setup,
                              int subcarrier = 0) {
  if (estimated.n_tx != setup.n_tx || estimated.n_rx != setup.n_rx) {
    throw std::invalid_argument("mf_precoder: tensor does not match the precoding setup");
  }
  const MimoMatrix h = estimated.channel_matrix(subcarrier);
  const double norm = h.norm();
  if (!(norm > 0.0)) {
    throw std::invalid_argument("mf_precoder: degenerate all-zero channel estimate");
  }
  return h.adjoint() / norm;
}

/// Received SNR (linear) of the precoded transmission over the true
/// channel, averaged across receive antennas:
/// P ||H W||_F^2 / (N_r sigma_v^2).
inline double received_snr(const ChannelTensor& actual, const MimoMatrix& precoder,
                           const PrecodingSetup& setup, int subcarrier = 0) {
  if (actual.n_tx != setup.n_tx || actual.n_rx != setup.n_rx) {
    throw std::invalid_argument("received_snr: tensor does not match the precoding setup");
  }
  if (precoder.rows() != setup.n_tx || precoder.cols() != setup.n_rx) {
    throw std::invalid_argument("received_snr: precoder dimensions mismatch");
  }
  const MimoMatrix h = actual.channel_matrix(subcarrier);
  const double signal = setup.tx_power * (h * precoder).squaredNorm();
  if (setup.noise_variance == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return signal / (static_cast<double>(setup.n_rx) * setup.noise_variance);
}

inline double to_db(double linear) { return 10.0 * std::log10(linear); }

/// Relative SNR gain in percent, on linear-scale inputs.
inline double snr_gain_percent(double proposed_linear, double conventional_linear) {
  if (!(conventional_linear > 0.0)) {
    throw std::domain_error("snr_gain_percent: baseline SNR must be positive");
  }
  return 100.0 * (proposed_linear - conventional_linear) / conventional_linear;
}

/// Aggregated outputs of one swept configuration.
struct MetricsRecord {
  double mse = 0.0;
  double snr_linear = 0.0;
  double snr_db = 0.0;
  double avg_feedback_bits = 0.0;
  std::string config_tag;
};

}  // namespace csifb
