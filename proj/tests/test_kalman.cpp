// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "csifb/kalman.hpp"
#include "csifb/rng.hpp"
#include "oracles.hpp"

using namespace csifb;

namespace {

StateSpaceModel scalar_model(cxd phi, double process_noise, double measurement_noise,
                             cxd pilot = cxd(1.0, 0.0)) {
  ArMatrix transition(1, 1);
  transition(0, 0) = phi;
  ArRow m(1);
  m(0) = pilot;
  return StateSpaceModel(std::move(transition), process_noise, std::move(m), measurement_noise);
}

}  // namespace

TEST_CASE("init_belief") {
  for (int p : {1, 3}) {
    const KalmanBelief b = init_belief(p);
    CHECK(b.state.isZero(0.0));
    CHECK(b.covariance.isIdentity(0.0));
    CHECK(b.covariance.trace().real() == Catch::Approx(static_cast<double>(p)));
  }
  CHECK_THROWS_AS(init_belief(0), std::invalid_argument);
}

TEST_CASE("predict hand-computed case") {
  const StateSpaceModel model = scalar_model(cxd(0.8, 0.0), 0.36, 0.0);
  const KalmanBelief prior = predict(init_belief(1), model);
  CHECK(prior.state(0) == cxd(0.0, 0.0));
  CHECK(prior.covariance(0, 0).real() == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("predict with identity transition and zero noise is the identity") {
  ArMatrix transition = ArMatrix::Identity(2, 2);
  ArRow m = ArRow::Zero(2);
  m(0) = cxd(1.0, 0.0);
  const StateSpaceModel model(std::move(transition), 0.0, std::move(m), 1.0);
  KalmanBelief b = init_belief(2);
  b.state(0) = cxd(0.3, -0.4);
  b.state(1) = cxd(-1.0, 0.2);
  const KalmanBelief prior = predict(b, model);
  CHECK(prior.state == b.state);
  CHECK(prior.covariance.isApprox(b.covariance, 1e-15));
}

TEST_CASE("repeated predict converges to the Lyapunov fixed point") {
  const StateSpaceModel model = scalar_model(cxd(0.8, 0.0), 0.36, 0.0);
  KalmanBelief b = init_belief(1);
  for (int i = 0; i < 2000; ++i) {
    b = predict(b, model);
  }
  const double reference = oracle::lyapunov_fixed_point(0.8, 0.36);
  CHECK(reference == Catch::Approx(1.0).margin(1e-12));
  CHECK(b.covariance(0, 0).real() == Catch::Approx(reference).margin(1e-12));
}

TEST_CASE("update hand-computed cases") {
  {
    // Noiseless measurement is fully trusted.
    const StateSpaceModel model = scalar_model(cxd(1.0, 0.0), 0.0, 0.0);
    const auto [posterior, innovation] = update(init_belief(1), cxd(2.5, -1.0), model);
    CHECK(posterior.state(0) == cxd(2.5, -1.0));
    CHECK(std::abs(posterior.covariance(0, 0)) < 1e-15);
    CHECK(innovation.value == cxd(2.5, -1.0));
  }
  {
    const StateSpaceModel model = scalar_model(cxd(1.0, 0.0), 0.0, 1.0);
    const auto [posterior, innovation] = update(init_belief(1), cxd(2.0, 0.0), model);
    CHECK(innovation.gain(0) == cxd(0.5, 0.0));
    CHECK(posterior.state(0) == cxd(1.0, 0.0));
    CHECK(posterior.covariance(0, 0).real() == Catch::Approx(0.5).margin(1e-15));
  }
}

TEST_CASE("static-channel filter equals the batch least-squares oracle") {
  const double sigma2 = 0.7;
  const StateSpaceModel model = scalar_model(cxd(1.0, 0.0), 0.0, sigma2);
  RngStream rng(99);
  const cxd truth = rng.complex_gaussian(1.0);
  KalmanBelief belief = init_belief(1);
  std::vector<cxd> observations;
  for (int n = 1; n <= 1000; ++n) {
    const cxd y = truth + rng.complex_gaussian(sigma2);
    observations.push_back(y);
    belief = update(predict(belief, model), y, model).posterior;
    const auto reference = oracle::batch_least_squares(observations, sigma2);
    REQUIRE(std::abs(belief.state(0) - reference.mean) < 1e-12);
    REQUIRE(std::abs(belief.covariance(0, 0).real() - reference.variance) < 1e-12);
  }
}

TEST_CASE("update rejects a degenerate innovation covariance") {
  const StateSpaceModel model = scalar_model(cxd(1.0, 0.0), 0.0, 0.0);
  KalmanBelief certain = init_belief(1);
  certain.covariance(0, 0) = cxd(0.0, 0.0);
  CHECK_THROWS_AS(update(certain, cxd(1.0, 0.0), model), numerical_error);
}

TEST_CASE("covariance stays Hermitian and positive semidefinite") {
  RngStream rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 1 + trial % 3;
    std::vector<cxd> weights;
    for (int l = 0; l < p; ++l) {
      weights.push_back(rng.complex_gaussian(0.3));
    }
    // Rescale until the companion recursion is comfortably stable.
    FadingConfig cfg = [&] {
      for (double scale = 1.0;; scale *= 0.7) {
        std::vector<cxd> scaled;
        for (const cxd& w : weights) {
          scaled.push_back(scale * w);
        }
        try {
          FadingConfig candidate = FadingConfig::ar(scaled, 0.1 + rng.uniform());
          if (candidate.spectral_radius() < 0.95) {
            return candidate;
          }
        } catch (const std::invalid_argument&) {
        }
      }
    }();
    const StateSpaceModel model =
        StateSpaceModel::from_fading(cfg, cxd(1.0, 0.0), 0.05 + rng.uniform());
    KalmanBelief belief = init_belief(p);
    for (int n = 0; n < 500; ++n) {
      belief = update(predict(belief, model), rng.complex_gaussian(1.0), model).posterior;
      const ArMatrix& cov = belief.covariance;
      CHECK((cov - cov.adjoint()).cwiseAbs().maxCoeff() <= 1e-9);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-9);
    }
  }
}

TEST_CASE("information never decreases on a static model") {
  ArMatrix transition = ArMatrix::Identity(2, 2);
  ArRow m = ArRow::Zero(2);
  m(0) = cxd(1.0, 0.0);
  const StateSpaceModel model(std::move(transition), 0.0, std::move(m), 0.8);
  RngStream rng(5);
  KalmanBelief belief = init_belief(2);
  double last_trace = belief.covariance.trace().real();
  for (int n = 0; n < 200; ++n) {
    belief = update(predict(belief, model), rng.complex_gaussian(1.0), model).posterior;
    const double trace = belief.covariance.trace().real();
    CHECK(trace <= last_trace + 1e-12);
    last_trace = trace;
  }
}

TEST_CASE("innovations are white on a matched model") {
  const FadingConfig cfg = FadingConfig::gauss_markov(0.5);
  const double sigma2 = 0.1;
  const StateSpaceModel model = StateSpaceModel::from_fading(cfg, cxd(1.0, 0.0), sigma2);
  RngStream channel_rng(31);
  RngStream noise_rng(32);
  LinkState state = initial_state(cfg, channel_rng);
  KalmanBelief belief = init_belief(1);
  std::vector<cxd> innovations;
  innovations.reserve(100000);
  for (int n = 0; n < 100000; ++n) {
    const cxd h = step(state, cfg, channel_rng);
    const cxd y = h + noise_rng.complex_gaussian(sigma2);
    const auto [posterior, innovation] = update(predict(belief, model), y, model);
    belief = posterior;
    innovations.push_back(innovation.value);
  }
  CHECK(oracle::autocorrelation(innovations, 1) < 0.02);
}

TEST_CASE("filtering beats the raw observation") {
  const FadingConfig cfg = FadingConfig::gauss_markov(0.5);
  const double sigma2 = 0.1;
  const StateSpaceModel model = StateSpaceModel::from_fading(cfg, cxd(1.0, 0.0), sigma2);
  RngStream channel_rng(77);
  RngStream noise_rng(78);
  LinkState state = initial_state(cfg, channel_rng);
  KalmanBelief belief = init_belief(1);
  double mse_filter = 0.0;
  double mse_raw = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const cxd h = step(state, cfg, channel_rng);
    const cxd y = h + noise_rng.complex_gaussian(sigma2);
    belief = update(predict(belief, model), y, model).posterior;
    mse_filter += std::norm(belief.state(0) - h);
    mse_raw += std::norm(y - h);
  }
  CHECK(mse_filter / n < mse_raw / n);
}

TEST_CASE("predict_channel") {
  {
    const StateSpaceModel model = scalar_model(cxd(1.0, 0.0), 0.0, 1.0);
    KalmanBelief b = init_belief(1);
    b.state(0) = cxd(0.7, -0.2);
    CHECK(predict_channel(b, model) == cxd(0.7, -0.2));
  }
  {
    const StateSpaceModel model = scalar_model(cxd(0.8, 0.0), 0.0, 1.0);
    KalmanBelief b = init_belief(1);
    b.state(0) = cxd(1.0, 0.0);
    CHECK(predict_channel(b, model) == cxd(0.8, 0.0));
  }
  {
    // Order 2: first row of the companion matrix weighs the state.
    const FadingConfig cfg = FadingConfig::ar({cxd(0.5, 0.1), cxd(-0.2, 0.0)}, 0.3);
    const StateSpaceModel model = StateSpaceModel::from_fading(cfg, cxd(1.0, 0.0), 1.0);
    KalmanBelief b = init_belief(2);
    b.state(0) = cxd(0.4, -0.6);
    b.state(1) = cxd(-1.1, 0.25);
    const cxd expected = cxd(0.5, 0.1) * b.state(0) + cxd(-0.2, 0.0) * b.state(1);
    CHECK(predict_channel(b, model) == expected);
  }
}

TEST_CASE("filter runs are deterministic") {
  const FadingConfig cfg = FadingConfig::gauss_markov(0.3);
  const StateSpaceModel model = StateSpaceModel::from_fading(cfg, cxd(1.0, 0.0), 0.2);
  auto run = [&] {
    RngStream rng(123);
    KalmanBelief belief = init_belief(1);
    for (int i = 0; i < 100; ++i) {
      belief = update(predict(belief, model), rng.complex_gaussian(1.0), model).posterior;
    }
    return belief;
  };
  const KalmanBelief a = run();
  const KalmanBelief b = run();
  CHECK(a.state == b.state);
  CHECK(a.covariance == b.covariance);
}
