// SPDX-License-Identifier: Apache-2.0
//
// Complex-valued Kalman filter over the companion-form AR state space.
// One scalar pilot observation per link per instant, so the innovation
// covariance is a scalar and the gain needs no matrix inverse. The same
// predict/update pair serves as channel estimator and one-step predictor
// at either end of the feedback loop.

#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "csifb/fading.hpp"
#include "csifb/types.hpp"

namespace csifb {

/// State-space form of the fading recursion.
///   x(n) = Phi x(n-1) + [w(n), 0, ..., 0]^T,  Var w = process_noise
///   y(n) = M x(n) + v(n),                     Var v = measurement_noise
/// Phi is the companion matrix of the per-lag weights; only the leading
/// state component receives process noise, and M = [pilot, 0, ..., 0].
struct StateSpaceModel {
  ArMatrix transition;
  double process_noise = 0.0;
  ArRow measurement;
  double measurement_noise = 0.0;

  StateSpaceModel(ArMatrix transition_in, double process_noise_in, ArRow measurement_in,
                  double measurement_noise_in)
      : transition(std::move(transition_in)),
        process_noise(process_noise_in),
        measurement(std::move(measurement_in)),
        measurement_noise(measurement_noise_in) {
    if (transition.rows() != transition.cols() || transition.rows() < 1) {
      throw std::invalid_argument("StateSpaceModel: transition must be square");
    }
    if (measurement.cols() != transition.rows()) {
      throw std::invalid_argument("StateSpaceModel: measurement row length mismatch");
    }
    if (!(process_noise >= 0.0) || !(measurement_noise >= 0.0)) {
      throw std::invalid_argument("StateSpaceModel: noise variances must be nonnegative");
    }
  }

  /// Builds the model matching a fading configuration: the transition
  /// absorbs any recursion scaling and the state noise is the effective
  /// innovation variance, so the state equation reproduces the simulated
  /// process exactly.
  static StateSpaceModel from_fading(const FadingConfig& config, cxd pilot,
                                     double measurement_noise) {
    const int p = config.order();
    ArRow m = ArRow::Zero(p);
    m(0) = pilot;
    return StateSpaceModel(config.companion(), config.ar_innovation_variance(), std::move(m),
                           measurement_noise);
  }

  int order() const { return static_cast<int>(transition.rows()); }
};

/// Filter belief: state estimate and error covariance.
struct KalmanBelief {
  ArVector state;
  ArMatrix covariance;
};

/// Scalar innovation and the gain that consumed it.
struct Innovation {
  cxd value{0.0, 0.0};
  ArVector gain;
};

struct UpdateResult {
  KalmanBelief posterior;
  Innovation innovation;
};

/// Zero state, identity covariance.
inline KalmanBelief init_belief(int order) {
  if (order < 1 || order > max_ar_order) {
    throw std::invalid_argument("init_belief: order out of range");
  }
  KalmanBelief b;
  b.state = ArVector::Zero(order);
  b.covariance = ArMatrix::Identity(order, order);
  return b;
}

namespace detail {

inline void hermitize(ArMatrix& p) { p = 0.5 * (p + p.adjoint()).eval(); }

}  // namespace detail

/// Time update: x <- Phi x, P <- Phi P Phi^H + Q_w.
inline KalmanBelief predict(const KalmanBelief& belief, const StateSpaceModel& model) {
  if (belief.state.size() != model.order()) {
    throw std::invalid_argument("predict: belief and model dimensions differ");
  }
  KalmanBelief prior;
  prior.state = model.transition * belief.state;
  prior.covariance =
      model.transition * belief.covariance * model.transition.adjoint();
  prior.covariance(0, 0) += model.process_noise;
  detail::hermitize(prior.covariance);
  return prior;
}

/// Variance of the next innovation under the prior: M P M^H + Q_v.
inline double innovation_covariance(const KalmanBelief& prior, const StateSpaceModel& model) {
  const cxd quad = (model.measurement * prior.covariance * model.measurement.adjoint())(0, 0);
  return quad.real() + model.measurement_noise;
}

/// Measurement update with a scalar observation.
inline UpdateResult update(const KalmanBelief& prior, cxd observation,
                           const StateSpaceModel& model) {
  if (prior.state.size() != model.order()) {
    throw std::invalid_argument("update: belief and model dimensions differ");
  }
  const double s = innovation_covariance(prior, model);
  if (!(s > 0.0)) {
    throw numerical_error("update: innovation covariance is not positive");
  }
  UpdateResult out;
  out.innovation.gain = (prior.covariance * model.measurement.adjoint()) / s;
  out.innovation.value = observation - (model.measurement * prior.state)(0);
  out.posterior.state = prior.state + out.innovation.gain * out.innovation.value;
  const int p = model.order();
  out.posterior.covariance =
      (ArMatrix::Identity(p, p) - out.innovation.gain * model.measurement) * prior.covariance;
  detail::hermitize(out.posterior.covariance);
  return out;
}

/// One-step-ahead channel prediction: first element of Phi x(n|n).
inline cxd predict_channel(const KalmanBelief& posterior, const StateSpaceModel& model) {
  return (model.transition * posterior.state)(0);
}

/// Steady-state covariances of the filter recursion. The covariance flow
/// does not depend on observation values, so a fixed-point iteration from
/// the initial belief settles both the one-step-ahead (prior) and the
/// filtered (posterior) error covariance.
struct SteadyCovariance {
  ArMatrix prior;
  ArMatrix posterior;
};

inline SteadyCovariance steady_covariance(const StateSpaceModel& model, int iterations = 600) {
  KalmanBelief belief = init_belief(model.order());
  ArMatrix prior_cov = belief.covariance;
  for (int i = 0; i < iterations; ++i) {
    const KalmanBelief prior = predict(belief, model);
    prior_cov = prior.covariance;
    if (innovation_covariance(prior, model) <= 1e-30) {
      belief = prior;  // fully certain prior under exact measurements
      continue;
    }
    belief = update(prior, cxd(0.0, 0.0), model).posterior;
  }
  return {std::move(prior_cov), std::move(belief.covariance)};
}

}  // namespace csifb
