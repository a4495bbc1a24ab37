// SPDX-License-Identifier: Apache-2.0
//
// Dual-predictor CSI reporting. Both ends run the same Kalman predictor on
// the same input -- the reconstructed channel estimate, which the BS
// computes from the feedback and the UE can compute because it knows the
// message it sent and the shared prediction. That common input is what
// keeps the two predictors bit-identical, which in turn is what lets the
// UE report only the quantized gap between its fresh estimate and the
// shared prediction.
//
// A session moves through three phases:
//   assessment     in-process capability negotiation
//   initialization conventional full-CSI feedback; calibrates both
//                  quantizer ranges from what actually flowed
//   prediction     delta feedback, suppressed entirely when the gap stays
//                  within the configured threshold
//
// During initialization the shared predictors consume the conventionally
// reconstructed estimates; afterwards they consume the delta-reconstructed
// ones. Their assumed observation noise follows the active quantizer
// (pilot noise plus the quantizer's nominal error), a quantity both ends
// can derive from negotiated state alone.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csifb/fading.hpp"
#include "csifb/kalman.hpp"
#include "csifb/quantizer.hpp"
#include "csifb/types.hpp"

namespace csifb {

struct protocol_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Phase : std::uint8_t { assessment, initialization, prediction };
enum class MessageKind : std::uint8_t { init, delta, suppressed };
enum class EstimatorKind : std::uint8_t { filtered, raw_observation };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::assessment: return "assessment";
    case Phase::initialization: return "initialization";
    default: return "prediction";
  }
}

inline const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::init: return "init";
    case MessageKind::delta: return "delta";
    default: return "suppressed";
  }
}

/// kappa sets how many standard deviations the scale estimate covers; the
/// active range is additionally calibrated toward the error-optimal
/// midrise load, which sits well inside three sigmas at low bit depths.
/// The full-CSI quantizer faces a stationary Gaussian load and takes the
/// tighter calibration; the delta stream is nonstationary (transients,
/// clip feedback), so its range keeps extra headroom.
inline constexpr double k_range_calibration = 0.8;
inline constexpr double k_delta_headroom = 1.1;

/// The delta range is also never allowed far above the gap scale the
/// negotiated model itself implies at steady state. When the model says
/// the channel is nearly frozen, the range follows it down and clipped
/// corrections simply creep the loop onto the initialization-phase
/// accuracy instead of oscillating by half an oversized cell.
inline constexpr double k_delta_model_cap = 2.2;

/// What the UE reports it can do.
struct UeCapabilities {
  bool supports_kalman = true;
  int memory_depth = max_ar_order;  // past CSI estimates the UE can retain
};

/// The BS side of the assessment exchange: the session blueprint.
struct SessionSettings {
  FadingConfig channel;
  int init_length = 20;
  double suppression_threshold = 0.0;
  double measurement_noise = 0.1;
  cxd pilot{1.0, 0.0};
  int bits = 1;  // per real dimension, both feedback quantizers
  double kappa = 3.0;
  EstimatorKind estimator = EstimatorKind::filtered;
};

/// Outcome of the assessment phase.
struct SessionConfig {
  bool prediction_enabled = true;
  FadingConfig channel;
  int predictor_order = 1;
  int memory_depth = max_ar_order;
  int init_length = 20;
  double suppression_threshold = 0.0;
  double measurement_noise = 0.1;
  cxd pilot{1.0, 0.0};
  double kappa = 3.0;
  EstimatorKind estimator = EstimatorKind::filtered;
  QuantizerSpec conventional;  // F_c, range refitted at the end of initialization
  QuantizerSpec delta;         // F_Q, likewise
};

/// Agrees on a session. Falls back to a conventional-only session when the
/// UE lacks the predictor or cannot retain enough past CSI.
inline SessionConfig assessment_handshake(const UeCapabilities& ue,
                                          const SessionSettings& proposal) {
  if (proposal.init_length < std::max(1, proposal.channel.order())) {
    throw std::invalid_argument("assessment_handshake: initialization shorter than the model order");
  }
  if (!(proposal.suppression_threshold >= 0.0)) {
    throw std::invalid_argument("assessment_handshake: suppression threshold must be nonnegative");
  }
  // Until calibration data exists, both quantizers use the range implied by
  // the model's known stationary power.
  const double prior_range =
      std::max(k_range_calibration * proposal.kappa *
                   std::sqrt(proposal.channel.stationary_power() / 2.0),
               1e-6);
  const bool enabled = ue.supports_kalman && ue.memory_depth >= proposal.channel.order();
  return SessionConfig{
      .prediction_enabled = enabled,
      .channel = proposal.channel,
      .predictor_order = proposal.channel.order(),
      .memory_depth = ue.memory_depth,
      .init_length = proposal.init_length,
      .suppression_threshold = proposal.suppression_threshold,
      .measurement_noise = proposal.measurement_noise,
      .pilot = proposal.pilot,
      .kappa = proposal.kappa,
      .estimator = proposal.estimator,
      .conventional = QuantizerSpec(proposal.bits, prior_range),
      .delta = QuantizerSpec(proposal.bits, prior_range),
  };
}

/// One report from UE to BS, covering every link of the grid. Cost is one
/// presence flag plus 2B bits per quantized scalar; a suppressed report is
/// the flag alone.
struct FeedbackMessage {
  MessageKind kind = MessageKind::suppressed;
  std::vector<QuantizedValue> payload;
  int bit_cost = 1;
};

struct UeState {
  Phase phase = Phase::assessment;
  int time_index = 0;  // completed report cycles
  std::vector<KalmanBelief> estimator;   // UE-local estimation filter
  std::vector<KalmanBelief> predictor;   // UE copy of the shared predictor
  std::vector<cxd> last_prediction;      // shared prediction made last cycle
  std::vector<cxd> last_estimate;        // freshest local estimates
};

struct BsState {
  Phase phase = Phase::assessment;
  int time_index = 0;
  std::vector<KalmanBelief> predictor;   // BS copy of the shared predictor
  std::vector<cxd> last_prediction;
};

/// Negotiated per-session state both ends hold: active quantizers and the
/// filter models derived from them.
struct SessionRuntime {
  SessionConfig config;
  int link_count = 0;
  QuantizerSpec conventional;
  QuantizerSpec delta;
  StateSpaceModel estimation_model;      // UE pilot filter
  StateSpaceModel predictor_init_model;  // shared predictor, initialization phase
  StateSpaceModel predictor_delta_model; // shared predictor, prediction phase

  static SessionRuntime create(const SessionConfig& config, int link_count) {
    if (link_count < 1) {
      throw std::invalid_argument("SessionRuntime: need at least one link");
    }
    return SessionRuntime{
        .config = config,
        .link_count = link_count,
        .conventional = config.conventional,
        .delta = config.delta,
        .estimation_model = StateSpaceModel::from_fading(config.channel, config.pilot,
                                                         config.measurement_noise),
        .predictor_init_model = init_predictor_model(config, config.conventional),
        .predictor_delta_model = delta_predictor_model(config),
    };
  }

  /// During initialization the feedback is full-range coarse CSI, and both
  /// ends know its quantizer, so the predictor's assumed observation noise
  /// carries the quantizer's nominal error on top of the pilot noise.
  static StateSpaceModel init_predictor_model(const SessionConfig& config,
                                              const QuantizerSpec& active) {
    return StateSpaceModel::from_fading(config.channel, cxd(1.0, 0.0),
                                        config.measurement_noise +
                                            active.nominal_error_variance());
  }

  /// In the prediction phase the predictor takes the delta-corrected
  /// estimates at face value: the model parameters assumed known are the
  /// channel's and the pilot's, nothing more. The filter therefore chases
  /// residual quantization noise hardest where its gain is large -- fast
  /// channels -- which is what eventually hands the conventional method
  /// the advantage as the channel approaches i.i.d.
  static StateSpaceModel delta_predictor_model(const SessionConfig& config) {
    return StateSpaceModel::from_fading(config.channel, cxd(1.0, 0.0),
                                        config.measurement_noise);
  }

  const StateSpaceModel& active_predictor_model(Phase phase) const {
    return phase == Phase::prediction ? predictor_delta_model : predictor_init_model;
  }
};

inline void begin_session(const SessionRuntime& runtime, UeState& ue, BsState& bs) {
  const int p = runtime.config.predictor_order;
  ue.phase = bs.phase = Phase::initialization;
  ue.time_index = bs.time_index = 0;
  ue.estimator.assign(runtime.link_count, init_belief(p));
  ue.predictor.assign(runtime.link_count, init_belief(p));
  ue.last_prediction.assign(runtime.link_count, cxd(0.0, 0.0));
  ue.last_estimate.assign(runtime.link_count, cxd(0.0, 0.0));
  bs.predictor.assign(runtime.link_count, init_belief(p));
  bs.last_prediction.assign(runtime.link_count, cxd(0.0, 0.0));
}

/// Predict/update with a guard for the fully-degenerate case: a zero
/// innovation covariance means a fully certain prior under exact
/// measurements, so the observation carries no usable weight and the prior
/// is kept unchanged.
inline KalmanBelief advance_filter(const KalmanBelief& posterior, cxd observation,
                                   const StateSpaceModel& model, cxd* innovation_out = nullptr) {
  KalmanBelief prior = predict(posterior, model);
  if (innovation_covariance(prior, model) <= 1e-30) {
    if (innovation_out != nullptr) {
      *innovation_out = observation - (model.measurement * prior.state)(0);
    }
    return prior;
  }
  UpdateResult result = update(prior, observation, model);
  if (innovation_out != nullptr) {
    *innovation_out = result.innovation.value;
  }
  return result.posterior;
}

/// UE-side channel estimate from one pilot observation. The filtered
/// variant runs the local estimation filter; the raw variant reports the
/// observation as-is.
inline cxd ue_estimate(cxd observation, UeState& ue, const SessionRuntime& runtime, int link) {
  if (ue.phase == Phase::assessment) {
    throw protocol_error("ue_estimate: session not initialized");
  }
  cxd estimate = observation;
  if (runtime.config.estimator == EstimatorKind::filtered) {
    ue.estimator[link] =
        advance_filter(ue.estimator[link], observation, runtime.estimation_model);
    estimate = ue.estimator[link].state(0);
  }
  ue.last_estimate[link] = estimate;
  return estimate;
}

/// Builds this cycle's report. Initialization (and any conventional-only
/// session) sends the full quantized estimates; the prediction phase sends
/// the quantized gap to the shared prediction, or nothing when every
/// link's gap is within the suppression threshold.
inline FeedbackMessage ue_report(std::span<const cxd> estimates, UeState& ue,
                                 const SessionRuntime& runtime) {
  if (ue.phase == Phase::assessment) {
    throw protocol_error("ue_report: session not initialized");
  }
  if (static_cast<int>(estimates.size()) != runtime.link_count) {
    throw std::invalid_argument("ue_report: estimate count does not match the link grid");
  }
  FeedbackMessage msg;
  const bool conventional_cycle =
      ue.phase == Phase::initialization || !runtime.config.prediction_enabled;
  if (conventional_cycle) {
    msg.kind = MessageKind::init;
    msg.payload.reserve(estimates.size());
    for (const cxd& estimate : estimates) {
      msg.payload.push_back(quantize(estimate, runtime.conventional, QuantizerRole::conventional));
    }
    msg.bit_cost = 1 + payload_bits(runtime.conventional) * static_cast<int>(estimates.size());
    return msg;
  }
  double max_gap = 0.0;
  std::vector<cxd> deltas(estimates.size());
  for (std::size_t l = 0; l < estimates.size(); ++l) {
    deltas[l] = ue.last_prediction[l] - estimates[l];
    max_gap = std::max(max_gap, std::abs(deltas[l]));
  }
  if (max_gap <= runtime.config.suppression_threshold) {
    msg.kind = MessageKind::suppressed;
    msg.bit_cost = 1;
    return msg;
  }
  msg.kind = MessageKind::delta;
  msg.payload.reserve(deltas.size());
  for (const cxd& d : deltas) {
    msg.payload.push_back(quantize(d, runtime.delta, QuantizerRole::delta));
  }
  msg.bit_cost = 1 + payload_bits(runtime.delta) * static_cast<int>(deltas.size());
  return msg;
}

/// BS-side reconstruction of the channel estimate from one report.
inline std::vector<cxd> bs_reconstruct(const FeedbackMessage& msg, BsState& bs,
                                       const SessionRuntime& runtime) {
  if (bs.phase == Phase::assessment) {
    throw protocol_error("bs_reconstruct: session not initialized");
  }
  std::vector<cxd> reconstructed(static_cast<std::size_t>(runtime.link_count));
  switch (msg.kind) {
    case MessageKind::init: {
      if (static_cast<int>(msg.payload.size()) != runtime.link_count) {
        throw protocol_error("bs_reconstruct: payload size mismatch");
      }
      for (std::size_t l = 0; l < reconstructed.size(); ++l) {
        reconstructed[l] = dequantize(msg.payload[l], runtime.conventional);
      }
      return reconstructed;
    }
    case MessageKind::delta: {
      if (bs.phase == Phase::initialization) {
        throw protocol_error("bs_reconstruct: delta message during initialization");
      }
      if (static_cast<int>(msg.payload.size()) != runtime.link_count) {
        throw protocol_error("bs_reconstruct: payload size mismatch");
      }
      for (std::size_t l = 0; l < reconstructed.size(); ++l) {
        reconstructed[l] = bs.last_prediction[l] - dequantize(msg.payload[l], runtime.delta);
      }
      return reconstructed;
    }
    case MessageKind::suppressed: {
      if (bs.phase == Phase::initialization) {
        throw protocol_error("bs_reconstruct: suppressed message during initialization");
      }
      for (std::size_t l = 0; l < reconstructed.size(); ++l) {
        reconstructed[l] = bs.last_prediction[l];
      }
      return reconstructed;
    }
  }
  throw protocol_error("bs_reconstruct: unknown message kind");
}

namespace detail {

inline bool bit_equal(cxd a, cxd b) {
  return std::bit_cast<std::uint64_t>(a.real()) == std::bit_cast<std::uint64_t>(b.real()) &&
         std::bit_cast<std::uint64_t>(a.imag()) == std::bit_cast<std::uint64_t>(b.imag());
}

}  // namespace detail

/// Advances both shared predictors on the reconstructed estimates -- the
/// one input both ends possess -- and emits the next prediction. The two
/// copies must stay bit-identical; any divergence is a fatal desync.
inline void advance_predictors(std::span<const cxd> reconstructed, UeState& ue, BsState& bs,
                               const SessionRuntime& runtime) {
  if (static_cast<int>(reconstructed.size()) != runtime.link_count) {
    throw std::invalid_argument("advance_predictors: link count mismatch");
  }
  const StateSpaceModel& model = runtime.active_predictor_model(ue.phase);
  for (int l = 0; l < runtime.link_count; ++l) {
    ue.predictor[l] = advance_filter(ue.predictor[l], reconstructed[l], model);
    bs.predictor[l] = advance_filter(bs.predictor[l], reconstructed[l], model);
    const cxd ue_prediction = predict_channel(ue.predictor[l], model);
    const cxd bs_prediction = predict_channel(bs.predictor[l], model);
    if (!detail::bit_equal(ue_prediction, bs_prediction)) {
      throw protocol_error("advance_predictors: predictor desync between BS and UE");
    }
    ue.last_prediction[l] = ue_prediction;
    bs.last_prediction[l] = bs_prediction;
  }
}

/// Steady gap scale implied by the negotiated models alone: one-step
/// prediction error of the shared predictor plus the UE estimator's
/// steady error. Both ends can evaluate it, so it is safe session state.
inline double model_gap_scale(const SessionRuntime& runtime) {
  const double prediction_error =
      steady_covariance(runtime.predictor_delta_model).prior(0, 0).real();
  const double estimation_error =
      runtime.config.estimator == EstimatorKind::filtered
          ? steady_covariance(runtime.estimation_model).posterior(0, 0).real()
          : runtime.config.measurement_noise;
  return std::sqrt(std::max(prediction_error + estimation_error, 0.0) / 2.0);
}

/// Refits both quantizer ranges from what the initialization phase
/// actually produced: the conventional range from the UE estimates, the
/// delta range from the observed prediction gaps. Falls back to the
/// analytic prior range when too little data accumulated.
inline void finalize_initialization(SessionRuntime& runtime,
                                    std::span<const cxd> estimate_samples,
                                    std::span<const cxd> delta_samples) {
  const int bits = runtime.config.conventional.bits;
  if (estimate_samples.size() >= 100) {
    runtime.conventional = QuantizerSpec(
        bits, k_range_calibration * fit_range(estimate_samples, runtime.config.kappa));
  }
  if (runtime.config.prediction_enabled && delta_samples.size() >= 100) {
    const double fitted =
        k_delta_headroom * k_range_calibration * fit_range(delta_samples, runtime.config.kappa);
    const double cap = k_delta_model_cap * k_range_calibration * runtime.config.kappa *
                       model_gap_scale(runtime);
    runtime.delta = QuantizerSpec(bits, std::max(std::min(fitted, cap), 1e-6));
  }
  runtime.predictor_delta_model = SessionRuntime::delta_predictor_model(runtime.config);
}

/// One line of the per-step diagnostic trace, one record per link.
struct StepRecord {
  int time_index = 0;
  Phase phase = Phase::initialization;
  MessageKind kind = MessageKind::init;
  int bit_cost = 0;
  double delta_abs = 0.0;
  cxd reconstructed{0.0, 0.0};
  cxd prediction{0.0, 0.0};
  int link = 0;
};

struct SessionRunOptions {
  bool collect_records = false;
  bool collect_messages = false;
  bool collect_estimates = false;
};

struct SessionResult {
  std::vector<ChannelTensor> reconstructed;  // BS-side estimate series
  std::vector<int> bit_costs;                // per report cycle
  std::vector<StepRecord> records;           // when collect_records
  std::vector<FeedbackMessage> messages;     // when collect_messages
  std::vector<ChannelTensor> ue_estimates;   // when collect_estimates
  QuantizerSpec fitted_conventional{1, 1.0};
  QuantizerSpec fitted_delta{1, 1.0};
};

/// Runs one closed-loop session over pregenerated channel and noise
/// traces: initialization first, then the prediction phase.
inline SessionResult run_link_session(std::span<const ChannelTensor> channel,
                                      std::span<const ChannelTensor> noise,
                                      const SessionConfig& config,
                                      const SessionRunOptions& options = {}) {
  if (channel.size() != noise.size()) {
    throw std::invalid_argument("run_link_session: channel and noise traces differ in length");
  }
  if (channel.size() < static_cast<std::size_t>(config.init_length)) {
    throw std::invalid_argument("run_link_session: trace shorter than the initialization phase");
  }
  const int links = static_cast<int>(channel.front().link_count());
  SessionRuntime runtime = SessionRuntime::create(config, links);
  UeState ue;
  BsState bs;
  begin_session(runtime, ue, bs);

  SessionResult result;
  result.reconstructed.reserve(channel.size());
  result.bit_costs.reserve(channel.size());
  std::vector<cxd> estimate_samples;
  std::vector<cxd> delta_samples;
  std::vector<cxd> estimates(static_cast<std::size_t>(links));
  std::vector<cxd> gaps(static_cast<std::size_t>(links), cxd(0.0, 0.0));

  for (std::size_t n = 0; n < channel.size(); ++n) {
    const ChannelTensor& h = channel[n];
    const ChannelTensor& v = noise[n];
    for (int l = 0; l < links; ++l) {
      const cxd observation =
          h.gains[static_cast<std::size_t>(l)] * config.pilot + v.gains[static_cast<std::size_t>(l)];
      estimates[static_cast<std::size_t>(l)] = ue_estimate(observation, ue, runtime, l);
      // The gap the report is based on: last cycle's shared prediction
      // against this cycle's fresh estimate. Stash it before the
      // predictors advance and overwrite last_prediction.
      gaps[static_cast<std::size_t>(l)] = ue.last_prediction[static_cast<std::size_t>(l)] -
                                          estimates[static_cast<std::size_t>(l)];
    }
    const FeedbackMessage msg = ue_report(estimates, ue, runtime);
    const std::vector<cxd> reconstructed = bs_reconstruct(msg, bs, runtime);
    if (config.prediction_enabled) {
      advance_predictors(reconstructed, ue, bs, runtime);
    }
    ++ue.time_index;
    ++bs.time_index;

    if (ue.phase == Phase::initialization) {
      estimate_samples.insert(estimate_samples.end(), estimates.begin(), estimates.end());
      // Fit the delta range on the settled tail of initialization. Early
      // cycles still carry the cold-start transient of an all-zero
      // predictor; a range widened by them would leave a one-bit quantizer
      // correcting small steady gaps by half a too-wide cell forever. The
      // window stretches back only as far as the fit needs samples.
      const int fit_cycles_needed = (100 + links - 1) / links;
      const int first_fit_cycle = std::max(
          2, std::min(config.init_length / 2 + 1, config.init_length - fit_cycles_needed + 1));
      if (ue.time_index >= first_fit_cycle && config.prediction_enabled) {
        delta_samples.insert(delta_samples.end(), gaps.begin(), gaps.end());
      }
    }

    ChannelTensor rec = ChannelTensor::zeros(h.n_tx, h.n_rx, h.n_subcarriers);
    rec.gains.assign(reconstructed.begin(), reconstructed.end());
    result.reconstructed.push_back(std::move(rec));
    result.bit_costs.push_back(msg.bit_cost);
    if (options.collect_estimates) {
      ChannelTensor est = ChannelTensor::zeros(h.n_tx, h.n_rx, h.n_subcarriers);
      est.gains = estimates;
      result.ue_estimates.push_back(std::move(est));
    }
    if (options.collect_records) {
      for (int l = 0; l < links; ++l) {
        result.records.push_back(StepRecord{
            .time_index = ue.time_index,
            .phase = ue.phase,
            .kind = msg.kind,
            .bit_cost = msg.bit_cost,
            .delta_abs = std::abs(gaps[static_cast<std::size_t>(l)]),
            .reconstructed = reconstructed[static_cast<std::size_t>(l)],
            .prediction = config.prediction_enabled
                              ? ue.last_prediction[static_cast<std::size_t>(l)]
                              : cxd(0.0, 0.0),
            .link = l,
        });
      }
    }
    if (options.collect_messages) {
      result.messages.push_back(msg);
    }

    if (ue.phase == Phase::initialization && ue.time_index == config.init_length) {
      finalize_initialization(runtime, estimate_samples, delta_samples);
      ue.phase = bs.phase = Phase::prediction;
    }
  }
  result.fitted_conventional = runtime.conventional;
  result.fitted_delta = runtime.delta;
  return result;
}

}  // namespace csifb
