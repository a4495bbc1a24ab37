// SPDX-License-Identifier: Apache-2.0
//
// Correlated Rayleigh fading as a complex autoregressive process.
//
// Two parameterizations produce the same simulation machinery:
//   * gauss_markov(tau): h(n) = sqrt(1 - tau^2) h(n-1) + tau w(n) with unit
//     stationary power. tau = 0 is a frozen channel, tau = 1 is i.i.d.
//   * jakes(p, f_m): per-lag weights fitted to the Jakes autocorrelation
//     J0(2 pi f_m l) through the Yule-Walker equations.
// Internally both reduce to effective per-lag weights phi(l) plus an
// effective innovation variance; the simulation step, the spectral density
// and the state-space export all consume that effective form.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "csifb/bessel.hpp"
#include "csifb/rng.hpp"
#include "csifb/types.hpp"

namespace csifb {

struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Autocorrelation of the channel gain under the Jakes fading model,
/// R(l) = J0(2 pi f_m l), with f_m the maximum Doppler shift normalized by
/// the sampling rate.
inline double jakes_autocorrelation(int lag, double doppler) {
  if (lag < 0) {
    throw std::domain_error("jakes_autocorrelation: lag must be nonnegative");
  }
  if (!(doppler >= 0.0)) {
    throw std::domain_error("jakes_autocorrelation: doppler must be nonnegative");
  }
  constexpr double k_two_pi = 6.28318530717958647692528676655900577;
  return bessel_j0(k_two_pi * doppler * static_cast<double>(lag));
}

struct YuleWalkerSolution {
  std::vector<cxd> coefficients;  // per-lag AR weights, lags 1..p
  double residual_variance = 0.0;
};

namespace detail {

/// 1-norm condition estimate of the p x p symmetric Toeplitz matrix built
/// from R(0..p-1). Orders are tiny, so a direct inverse is fine.
inline double toeplitz_condition(const std::vector<double>& autocorr, int order) {
  Eigen::MatrixXd t(order, order);
  for (int i = 0; i < order; ++i) {
    for (int j = 0; j < order; ++j) {
      t(i, j) = autocorr[static_cast<std::size_t>(std::abs(i - j))];
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(t);
  if (!lu.isInvertible()) {
    return std::numeric_limits<double>::infinity();
  }
  const double norm = t.cwiseAbs().colwise().sum().maxCoeff();
  const double inv_norm = lu.inverse().cwiseAbs().colwise().sum().maxCoeff();
  return norm * inv_norm;
}

}  // namespace detail

/// Solves the Yule-Walker equations T c = r for the AR weights of an
/// order-p process with autocorrelation R(0..p), via the Levinson-Durbin
/// recursion. Returns the weights and the innovation (residual) variance
/// sigma^2 = R(0) - sum_l c(l) R(l).
inline YuleWalkerSolution yule_walker(const std::vector<double>& autocorr, int order) {
  if (order < 1) {
    throw std::invalid_argument("yule_walker: order must be >= 1");
  }
  if (autocorr.size() != static_cast<std::size_t>(order) + 1) {
    throw std::invalid_argument("yule_walker: need autocorrelation lags 0.." +
                                std::to_string(order));
  }
  if (!(autocorr[0] > 0.0)) {
    throw std::invalid_argument("yule_walker: R(0) must be positive");
  }
  const double condition = detail::toeplitz_condition(autocorr, order);
  if (!(condition <= 1e12)) {
    throw numerical_error("yule_walker: Toeplitz system ill-conditioned, condition estimate " +
                          std::to_string(condition));
  }

  std::vector<double> a(static_cast<std::size_t>(order) + 1, 0.0);
  std::vector<double> prev(a.size(), 0.0);
  double err = autocorr[0];
  for (int k = 1; k <= order; ++k) {
    double acc = autocorr[static_cast<std::size_t>(k)];
    for (int j = 1; j < k; ++j) {
      acc -= a[static_cast<std::size_t>(j)] * autocorr[static_cast<std::size_t>(k - j)];
    }
    const double reflection = acc / err;
    prev = a;
    a[static_cast<std::size_t>(k)] = reflection;
    for (int j = 1; j < k; ++j) {
      a[static_cast<std::size_t>(j)] =
          prev[static_cast<std::size_t>(j)] - reflection * prev[static_cast<std::size_t>(k - j)];
    }
    err *= (1.0 - reflection * reflection);
  }

  YuleWalkerSolution out;
  out.coefficients.reserve(static_cast<std::size_t>(order));
  double residual = autocorr[0];
  for (int l = 1; l <= order; ++l) {
    out.coefficients.emplace_back(a[static_cast<std::size_t>(l)], 0.0);
    residual -= a[static_cast<std::size_t>(l)] * autocorr[static_cast<std::size_t>(l)];
  }
  out.residual_variance = std::max(residual, 0.0);
  return out;
}

/// Parameters of the fading process. Immutable after construction; the
/// constructor validates stability of the resulting recursion.
class FadingConfig {
 public:
  /// Eq.-style parameterization: h(n) = sqrt(1-tau^2) sum_l c(l) h(n-l) + tau w(n),
  /// with w complex Gaussian of variance sigma_p^2.
  FadingConfig(std::vector<cxd> coefficients, double tau, double innovation_variance,
               double doppler = 0.0)
      : FadingConfig(std::move(coefficients), tau, innovation_variance, doppler,
                     std::sqrt(1.0 - tau * tau), tau) {}

  /// One-parameter Gauss-Markov channel with unit stationary power:
  /// h(n) = sqrt(1-tau^2) h(n-1) + tau w(n).
  static FadingConfig gauss_markov(double tau) {
    return FadingConfig({cxd(1.0, 0.0)}, tau, 1.0, 0.0);
  }

  /// Plain AR form h(n) = sum_l weights(l) h(n-l) + w(n) with the given
  /// innovation variance. The stored tau is the implied one-step
  /// unpredictability sqrt(innovation variance / stationary power).
  static FadingConfig ar(std::vector<cxd> weights, double innovation_variance,
                         double doppler = 0.0) {
    FadingConfig cfg(std::move(weights), /*tau=*/0.0, innovation_variance, doppler,
                     /*coeff_scale=*/1.0, /*innovation_scale=*/1.0);
    const double ratio = cfg.ar_innovation_variance() / cfg.stationary_power();
    cfg.tau_ = std::sqrt(std::clamp(ratio, 0.0, 1.0));
    return cfg;
  }

  /// AR weights fitted to the Jakes autocorrelation at the given normalized
  /// maximum Doppler shift, through the Yule-Walker equations.
  static FadingConfig jakes(int order, double doppler) {
    std::vector<double> autocorr;
    autocorr.reserve(static_cast<std::size_t>(order) + 1);
    for (int lag = 0; lag <= order; ++lag) {
      autocorr.push_back(jakes_autocorrelation(lag, doppler));
    }
    YuleWalkerSolution yw = yule_walker(autocorr, order);
    return ar(std::move(yw.coefficients), yw.residual_variance, doppler);
  }

  int order() const { return static_cast<int>(coefficients_.size()); }
  const std::vector<cxd>& coefficients() const { return coefficients_; }
  double tau() const { return tau_; }
  double innovation_variance() const { return innovation_variance_; }
  double doppler() const { return doppler_; }

  /// Effective per-lag weights of the simulated recursion (scaling folded in).
  const ArVector& ar_weights() const { return weights_; }
  /// Effective innovation variance of the simulated recursion.
  double ar_innovation_variance() const { return effective_innovation_; }
  double stationary_power() const { return stationary_power_; }
  double spectral_radius() const { return spectral_radius_; }

  /// Companion-form state transition matrix (first row = effective weights,
  /// ones on the subdiagonal).
  ArMatrix companion() const {
    const int p = order();
    ArMatrix phi = ArMatrix::Zero(p, p);
    for (int l = 0; l < p; ++l) {
      phi(0, l) = weights_(l);
    }
    for (int i = 1; i < p; ++i) {
      phi(i, i - 1) = cxd(1.0, 0.0);
    }
    return phi;
  }

 private:
  FadingConfig(std::vector<cxd> coefficients, double tau, double innovation_variance,
               double doppler, double coeff_scale, double innovation_scale)
      : coefficients_(std::move(coefficients)),
        tau_(tau),
        innovation_variance_(innovation_variance),
        doppler_(doppler) {
    if (coefficients_.empty() || coefficients_.size() > max_ar_order) {
      throw std::invalid_argument("FadingConfig: order must be in [1, " +
                                  std::to_string(max_ar_order) + "]");
    }
    if (!(tau >= 0.0 && tau <= 1.0)) {
      throw std::invalid_argument("FadingConfig: tau must lie in [0, 1]");
    }
    if (!(innovation_variance > 0.0)) {
      throw std::invalid_argument("FadingConfig: innovation variance must be positive");
    }
    if (!(doppler >= 0.0)) {
      throw std::invalid_argument("FadingConfig: doppler must be nonnegative");
    }
    const int p = order();
    weights_.resize(p);
    for (int l = 0; l < p; ++l) {
      weights_(l) = coeff_scale * coefficients_[static_cast<std::size_t>(l)];
    }
    effective_innovation_ = innovation_scale * innovation_scale * innovation_variance;

    Eigen::ComplexEigenSolver<ArMatrix> eig(companion(), /*computeEigenvectors=*/false);
    spectral_radius_ = eig.eigenvalues().cwiseAbs().maxCoeff();
    // A unit-radius recursion is acceptable only when it carries no
    // innovation (a frozen channel); anything else grows without bound.
    const bool marginal_ok = effective_innovation_ == 0.0 && spectral_radius_ <= 1.0 + 1e-12;
    if (!marginal_ok && !(spectral_radius_ < 1.0 - 1e-12)) {
      throw std::invalid_argument("FadingConfig: unstable recursion, spectral radius " +
                                  std::to_string(spectral_radius_));
    }
    stationary_power_ = compute_stationary_power();
  }

  double compute_stationary_power() const {
    // Frozen channel: no Lyapunov fixed point; links hold their unit-power
    // initial draw.
    if (effective_innovation_ == 0.0) {
      return 1.0;
    }
    const int p = order();
    const ArMatrix phi = companion();
    // Solve S = phi S phi^H + q e1 e1^T by vectorization.
    Eigen::MatrixXcd kron(p * p, p * p);
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        for (int k = 0; k < p; ++k) {
          for (int l = 0; l < p; ++l) {
            kron(i * p + j, k * p + l) = phi(i, k) * std::conj(phi(j, l));
          }
        }
      }
    }
    Eigen::MatrixXcd lhs = Eigen::MatrixXcd::Identity(p * p, p * p) - kron;
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(p * p);
    rhs(0) = effective_innovation_;
    Eigen::VectorXcd vec_s = lhs.fullPivLu().solve(rhs);
    return vec_s(0).real();
  }

  std::vector<cxd> coefficients_;
  double tau_;
  double innovation_variance_;
  double doppler_;
  ArVector weights_;
  double effective_innovation_ = 0.0;
  double stationary_power_ = 1.0;
  double spectral_radius_ = 0.0;
};

/// Power spectral density of the configured AR process at normalized
/// frequency f in [-0.5, 0.5]. The per-lag weights enter the denominator
/// negated relative to the recursion, so positive weights make DC the peak.
inline double power_spectral_density(const FadingConfig& config, double f) {
  if (!(f >= -0.5 && f <= 0.5)) {
    throw std::domain_error("power_spectral_density: f must lie in [-0.5, 0.5]");
  }
  constexpr double k_two_pi = 6.28318530717958647692528676655900577;
  cxd denom(1.0, 0.0);
  for (int l = 1; l <= config.order(); ++l) {
    denom -= config.ar_weights()(l - 1) * std::polar(1.0, -k_two_pi * f * l);
  }
  const double mag2 = std::norm(denom);
  if (mag2 < 1e-12) {
    return std::numeric_limits<double>::infinity();
  }
  return config.ar_innovation_variance() / mag2;
}

/// Rolling state of one fading link: the last p gains, newest first.
struct LinkState {
  ArVector history;
  long time_index = 0;
};

/// Draws an initial history. Entries are independent draws at the stationary
/// power; for p > 1 the joint law is only approximate, which burn-in fixes.
inline LinkState initial_state(const FadingConfig& config, RngStream& rng) {
  LinkState state;
  state.history.resize(config.order());
  for (int i = 0; i < config.order(); ++i) {
    state.history(i) = rng.complex_gaussian(config.stationary_power());
  }
  return state;
}

/// Advances one link by one step and returns the new gain.
inline cxd step(LinkState& state, const FadingConfig& config, RngStream& rng) {
  const int p = config.order();
  if (state.history.size() != p) {
    throw std::invalid_argument("step: history length does not match the configured order");
  }
  cxd gain(0.0, 0.0);
  for (int l = 0; l < p; ++l) {
    gain += config.ar_weights()(l) * state.history(l);
  }
  const double innovation_variance = config.ar_innovation_variance();
  if (innovation_variance > 0.0) {
    gain += rng.complex_gaussian(innovation_variance);
  }
  for (int i = p - 1; i >= 1; --i) {
    state.history(i) = state.history(i - 1);
  }
  state.history(0) = gain;
  ++state.time_index;
  return gain;
}

/// Complex gains across the MIMO grid at one time instant, indexed by
/// (tx antenna, rx antenna, subcarrier). The flat link index
/// (tx * n_rx + rx) * n_subcarriers + sub is used consistently everywhere
/// a per-link array appears.
struct ChannelTensor {
  int n_tx = 0;
  int n_rx = 0;
  int n_subcarriers = 0;
  std::vector<cxd> gains;

  static ChannelTensor zeros(int n_tx, int n_rx, int n_subcarriers) {
    ChannelTensor t;
    t.n_tx = n_tx;
    t.n_rx = n_rx;
    t.n_subcarriers = n_subcarriers;
    t.gains.assign(static_cast<std::size_t>(n_tx) * n_rx * n_subcarriers, cxd(0.0, 0.0));
    return t;
  }

  std::size_t link_count() const { return gains.size(); }

  std::size_t link_index(int tx, int rx, int sub) const {
    return (static_cast<std::size_t>(tx) * n_rx + rx) * n_subcarriers + sub;
  }

  cxd& at(int tx, int rx, int sub) { return gains[link_index(tx, rx, sub)]; }
  cxd at(int tx, int rx, int sub) const { return gains[link_index(tx, rx, sub)]; }

  /// Channel matrix of one subcarrier, receive antennas by transmit antennas.
  MimoMatrix channel_matrix(int sub) const {
    MimoMatrix h(n_rx, n_tx);
    for (int i = 0; i < n_tx; ++i) {
      for (int j = 0; j < n_rx; ++j) {
        h(j, i) = at(i, j, sub);
      }
    }
    return h;
  }

  void validate() const {
    if (n_tx < 1 || n_rx < 1 || n_subcarriers < 1 ||
        gains.size() != static_cast<std::size_t>(n_tx) * n_rx * n_subcarriers) {
      throw std::invalid_argument("ChannelTensor: inconsistent dimensions");
    }
    for (const cxd& g : gains) {
      if (!std::isfinite(g.real()) || !std::isfinite(g.imag())) {
        throw std::invalid_argument("ChannelTensor: non-finite gain");
      }
    }
  }
};

/// Per-link fading states plus their innovation substreams for one
/// (trial, grid) pair. Links are statistically independent by construction.
struct ChannelGrid {
  int n_tx = 0;
  int n_rx = 0;
  int n_subcarriers = 0;
  std::vector<LinkState> states;
  std::vector<RngStream> streams;

  static ChannelGrid create(int n_tx, int n_rx, int n_subcarriers, const FadingConfig& config,
                            std::uint64_t master_seed, std::uint64_t trial) {
    if (n_tx < 1 || n_rx < 1 || n_subcarriers < 1) {
      throw std::invalid_argument("ChannelGrid: dimensions must be positive");
    }
    ChannelGrid grid;
    grid.n_tx = n_tx;
    grid.n_rx = n_rx;
    grid.n_subcarriers = n_subcarriers;
    const std::size_t links = static_cast<std::size_t>(n_tx) * n_rx * n_subcarriers;
    grid.states.reserve(links);
    grid.streams.reserve(links);
    for (std::size_t link = 0; link < links; ++link) {
      RngStream history =
          RngStream::derive(master_seed, StreamDomain::channel_history, trial, link);
      grid.states.push_back(initial_state(config, history));
      grid.streams.push_back(
          RngStream::derive(master_seed, StreamDomain::channel_innovation, trial, link));
    }
    return grid;
  }

  std::size_t link_count() const { return states.size(); }
};

/// Steps every link once, each from its own substream, and returns the
/// resulting tensor of gains.
inline ChannelTensor sample_tensor(ChannelGrid& grid, const FadingConfig& config) {
  ChannelTensor tensor = ChannelTensor::zeros(grid.n_tx, grid.n_rx, grid.n_subcarriers);
  for (std::size_t link = 0; link < grid.link_count(); ++link) {
    tensor.gains[link] = step(grid.states[link], config, grid.streams[link]);
  }
  return tensor;
}

/// Discards the start-up transient so statistics are collected at
/// stationarity.
inline void burn_in(ChannelGrid& grid, const FadingConfig& config, int steps) {
  for (int n = 0; n < steps; ++n) {
    for (std::size_t link = 0; link < grid.link_count(); ++link) {
      step(grid.states[link], config, grid.streams[link]);
    }
  }
}

inline int default_burn_in(const FadingConfig& config) { return 10 * config.order(); }

}  // namespace csifb
