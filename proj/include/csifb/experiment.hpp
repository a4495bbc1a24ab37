// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo experiment runner. A sweep evaluates every (method, tau,
// bits) grid point over `trials` independent sessions. Channel and noise
// substreams are keyed by (seed, trial, link) only, so every grid point
// and both methods see the very same realizations -- method differences
// are never masked by Monte Carlo noise. Per-trial results are reduced in
// fixed trial order, which keeps the output byte-identical regardless of
// how many worker threads ran.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "csifb/config_file.hpp"
#include "csifb/fading.hpp"
#include "csifb/metrics.hpp"
#include "csifb/protocol.hpp"
#include "csifb/rng.hpp"

namespace csifb {

enum class ChannelMode : std::uint8_t { gauss_markov, jakes };
enum class MethodSelection : std::uint8_t { conventional, proposed, both };

struct ExperimentConfig {
  int n_tx = 4;
  int n_rx = 2;
  int subcarriers = 1;
  int trials = 200;
  int samples = 1000;  // RS instants per trial, initialization included
  int burn_in = -1;    // -1: ten times the model order
  std::uint64_t seed = 42;

  ChannelMode channel_mode = ChannelMode::gauss_markov;
  int order = 1;          // jakes mode
  double doppler = 0.05;  // jakes mode

  std::vector<double> tau_sweep = {0.5};
  std::vector<int> bits_sweep = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  MethodSelection methods = MethodSelection::both;

  double noise_variance = 0.1;
  double tx_power = 1.0;
  int init_length = 20;
  double epsilon = 0.0;
  double kappa = 3.0;
  EstimatorKind estimator = EstimatorKind::filtered;
  int threads = 0;  // 0: hardware concurrency

  /// Collects every violated constraint; empty means valid.
  std::vector<std::string> validate() const {
    std::vector<std::string> errors;
    if (n_tx < 1 || n_tx > max_antennas) {
      errors.push_back("n_t must lie in [1, " + std::to_string(max_antennas) + "]");
    }
    if (n_rx < 1 || n_rx > max_antennas) {
      errors.push_back("n_r must lie in [1, " + std::to_string(max_antennas) + "]");
    }
    if (subcarriers < 1) {
      errors.push_back("subcarriers must be >= 1");
    }
    if (trials < 1) {
      errors.push_back("trials must be >= 1");
    }
    if (init_length < 1) {
      errors.push_back("init_length must be >= 1");
    }
    if (samples <= init_length) {
      errors.push_back("samples must exceed init_length");
    }
    if (burn_in < -1) {
      errors.push_back("burn_in must be >= 0 (or -1 for the default)");
    }
    if (bits_sweep.empty()) {
      errors.push_back("bits sweep must be nonempty");
    }
    for (int b : bits_sweep) {
      if (b < 1 || b > 24) {
        errors.push_back("swept bits value " + std::to_string(b) + " outside [1, 24]");
      }
    }
    if (channel_mode == ChannelMode::gauss_markov) {
      if (tau_sweep.empty()) {
        errors.push_back("tau sweep must be nonempty");
      }
      for (double t : tau_sweep) {
        if (!(t >= 0.0 && t <= 1.0)) {
          errors.push_back("swept tau value " + std::to_string(t) + " outside [0, 1]");
        }
      }
    } else {
      if (order < 1 || order > max_ar_order) {
        errors.push_back("jakes order must lie in [1, " + std::to_string(max_ar_order) + "]");
      }
      if (!(doppler >= 0.0)) {
        errors.push_back("doppler must be nonnegative");
      }
      if (tau_sweep.size() > 1) {
        errors.push_back("a tau sweep requires the gauss_markov channel mode");
      }
    }
    if (!(noise_variance >= 0.0)) {
      errors.push_back("noise_variance must be nonnegative");
    }
    if (!(tx_power > 0.0)) {
      errors.push_back("tx_power must be positive");
    }
    if (!(epsilon >= 0.0)) {
      errors.push_back("epsilon must be nonnegative");
    }
    if (!(kappa > 0.0)) {
      errors.push_back("kappa must be positive");
    }
    if (threads < 0) {
      errors.push_back("threads must be >= 0");
    }
    return errors;
  }
};

struct ResultRow {
  std::string method;
  int bits = 0;
  double tau = 0.0;
  double mse = 0.0;
  double snr_linear = 0.0;
  double snr_db = 0.0;
  double avg_bits = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

namespace detail {

struct TrialTraces {
  std::vector<ChannelTensor> channel;
  std::vector<ChannelTensor> noise;
};

inline FadingConfig make_fading(const ExperimentConfig& cfg, double tau) {
  if (cfg.channel_mode == ChannelMode::gauss_markov) {
    return FadingConfig::gauss_markov(tau);
  }
  return FadingConfig::jakes(cfg.order, cfg.doppler);
}

inline TrialTraces generate_trial_traces(const ExperimentConfig& cfg, const FadingConfig& fading,
                                         std::uint64_t trial) {
  TrialTraces traces;
  ChannelGrid grid =
      ChannelGrid::create(cfg.n_tx, cfg.n_rx, cfg.subcarriers, fading, cfg.seed, trial);
  burn_in(grid, fading, cfg.burn_in >= 0 ? cfg.burn_in : default_burn_in(fading));
  traces.channel.reserve(static_cast<std::size_t>(cfg.samples));
  traces.noise.reserve(static_cast<std::size_t>(cfg.samples));
  std::vector<RngStream> noise_streams;
  const std::size_t links = grid.link_count();
  noise_streams.reserve(links);
  for (std::size_t link = 0; link < links; ++link) {
    noise_streams.push_back(
        RngStream::derive(cfg.seed, StreamDomain::measurement_noise, trial, link));
  }
  for (int n = 0; n < cfg.samples; ++n) {
    traces.channel.push_back(sample_tensor(grid, fading));
    ChannelTensor v = ChannelTensor::zeros(cfg.n_tx, cfg.n_rx, cfg.subcarriers);
    if (cfg.noise_variance > 0.0) {
      for (std::size_t link = 0; link < links; ++link) {
        v.gains[link] = noise_streams[link].complex_gaussian(cfg.noise_variance);
      }
    }
    traces.noise.push_back(std::move(v));
  }
  return traces;
}

inline SessionConfig make_session_config(const ExperimentConfig& cfg, const FadingConfig& fading,
                                         int bits, bool proposed) {
  SessionSettings settings{
      .channel = fading,
      .init_length = cfg.init_length,
      .suppression_threshold = cfg.epsilon,
      .measurement_noise = cfg.noise_variance,
      .pilot = cxd(1.0, 0.0),
      .bits = bits,
      .kappa = cfg.kappa,
      .estimator = cfg.estimator,
  };
  // The conventional baseline is the negotiated fallback: a UE that does
  // not run the predictor.
  UeCapabilities capabilities;
  capabilities.supports_kalman = proposed;
  return assessment_handshake(capabilities, settings);
}

}  // namespace detail

struct TrialOutcome {
  double mse = 0.0;
  double snr_mean = 0.0;
  double avg_bits = 0.0;
};

/// Runs one (method, tau, bits, trial) session and evaluates it over the
/// prediction window, where the two methods actually differ. The received
/// SNR pairs each precoder with the next instant's channel: transmission
/// happens after the report that produced the precoder, so the CSI it uses
/// is one step stale by construction.
inline TrialOutcome run_single_trial(const ExperimentConfig& cfg, const FadingConfig& fading,
                                     int bits, bool proposed, std::uint64_t trial,
                                     const SessionRunOptions& options = {},
                                     SessionResult* result_out = nullptr) {
  const detail::TrialTraces traces = detail::generate_trial_traces(cfg, fading, trial);
  const SessionConfig session = detail::make_session_config(cfg, fading, bits, proposed);
  SessionResult result = run_link_session(traces.channel, traces.noise, session, options);

  const std::size_t window_begin = static_cast<std::size_t>(cfg.init_length);
  const std::size_t n = traces.channel.size();
  TrialOutcome outcome;
  outcome.mse = mean_squared_error(
      std::span<const ChannelTensor>(traces.channel).subspan(window_begin),
      std::span<const ChannelTensor>(result.reconstructed).subspan(window_begin));

  const PrecodingSetup setup{
      .tx_power = cfg.tx_power,
      .noise_variance = cfg.noise_variance,
      .n_tx = cfg.n_tx,
      .n_rx = cfg.n_rx,
  };
  double snr_acc = 0.0;
  std::size_t snr_count = 0;
  for (std::size_t i = window_begin; i + 1 < n; ++i) {
    for (int sub = 0; sub < cfg.subcarriers; ++sub) {
      const MimoMatrix w = mf_precoder(result.reconstructed[i], setup, sub);
      snr_acc += received_snr(traces.channel[i + 1], w, setup, sub);
      ++snr_count;
    }
  }
  outcome.snr_mean = snr_count > 0 ? snr_acc / static_cast<double>(snr_count) : 0.0;

  double bits_acc = 0.0;
  for (std::size_t i = window_begin; i < n; ++i) {
    bits_acc += static_cast<double>(result.bit_costs[i]);
  }
  outcome.avg_bits = bits_acc / static_cast<double>(n - window_begin);

  if (result_out != nullptr) {
    *result_out = std::move(result);
  }
  return outcome;
}

/// Evaluates the full sweep grid. Deterministic for a fixed (config, seed)
/// pair at any thread count.
inline ResultTable run_sweep(const ExperimentConfig& cfg) {
  const std::vector<std::string> errors = cfg.validate();
  if (!errors.empty()) {
    std::string joined = "invalid experiment configuration:";
    for (const std::string& e : errors) {
      joined += "\n  - " + e;
    }
    throw std::invalid_argument(joined);
  }

  std::vector<bool> proposed_values;
  if (cfg.methods != MethodSelection::proposed) {
    proposed_values.push_back(false);
  }
  if (cfg.methods != MethodSelection::conventional) {
    proposed_values.push_back(true);
  }
  const std::vector<double> taus =
      cfg.channel_mode == ChannelMode::gauss_markov ? cfg.tau_sweep : std::vector<double>{0.0};

  ResultTable table;
  for (bool proposed : proposed_values) {
    for (double tau : taus) {
      const FadingConfig fading = detail::make_fading(cfg, tau);
      const double tau_column =
          cfg.channel_mode == ChannelMode::gauss_markov ? tau : fading.tau();
      for (int bits : cfg.bits_sweep) {
        std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(cfg.trials));
        std::atomic<int> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&] {
          for (int t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1)) {
            try {
              outcomes[static_cast<std::size_t>(t)] =
                  run_single_trial(cfg, fading, bits, proposed, static_cast<std::uint64_t>(t));
            } catch (...) {
              const std::scoped_lock lock(failure_mutex);
              if (!failure) {
                failure = std::current_exception();
              }
              return;
            }
          }
        };
        unsigned hardware = std::thread::hardware_concurrency();
        int thread_count = cfg.threads > 0 ? cfg.threads
                                           : static_cast<int>(hardware > 0 ? hardware : 1);
        thread_count = std::min(thread_count, cfg.trials);
        std::vector<std::thread> pool;
        for (int i = 1; i < thread_count; ++i) {
          pool.emplace_back(worker);
        }
        worker();
        for (std::thread& th : pool) {
          th.join();
        }
        if (failure) {
          std::rethrow_exception(failure);
        }

        ResultRow row;
        row.method = proposed ? "proposed" : "conventional";
        row.bits = bits;
        row.tau = tau_column;
        row.trials = cfg.trials;
        row.seed = cfg.seed;
        for (const TrialOutcome& o : outcomes) {  // fixed trial order
          row.mse += o.mse;
          row.snr_linear += o.snr_mean;
          row.avg_bits += o.avg_bits;
        }
        row.mse /= cfg.trials;
        row.snr_linear /= cfg.trials;
        row.avg_bits /= cfg.trials;
        row.snr_db = to_db(row.snr_linear);
        table.rows.push_back(std::move(row));
      }
    }
  }
  return table;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Writes the result table: one header row, then one data row per entry.
inline void emit_csv(const ResultTable& table, const std::filesystem::path& path,
                     std::span<const std::string> preamble_comments = {}) {
  if (table.rows.empty()) {
    throw std::invalid_argument("emit_csv: refusing to write an empty table");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("emit_csv: cannot open " + path.string() + " for writing");
  }
  for (const std::string& comment : preamble_comments) {
    out << "# " << comment << "\n";
  }
  out << "method,bits,tau,mse,snr_linear,snr_db,avg_bits,trials,seed\n";
  for (const ResultRow& row : table.rows) {
    out << row.method << ',' << row.bits << ',' << detail::format_double(row.tau) << ','
        << detail::format_double(row.mse) << ',' << detail::format_double(row.snr_linear) << ','
        << detail::format_double(row.snr_db) << ',' << detail::format_double(row.avg_bits) << ','
        << row.trials << ',' << row.seed << "\n";
  }
  if (!out) {
    throw std::runtime_error("emit_csv: write to " + path.string() + " failed");
  }
}

/// Built-in experiment grids.
inline ExperimentConfig preset_fig3() {
  ExperimentConfig cfg;
  cfg.tau_sweep = {0.1, 0.5};
  cfg.bits_sweep = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  return cfg;
}

inline ExperimentConfig preset_fig4() {
  ExperimentConfig cfg;
  cfg.tau_sweep = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  cfg.bits_sweep = {1, 2};
  return cfg;
}

/// Applies one parsed config entry; unknown keys and bad values land in
/// `errors` so a caller can report every problem at once.
inline void apply_config_entry(ExperimentConfig& cfg, const ConfigEntry& entry,
                               std::vector<std::string>& errors) {
  const auto fail = [&](const std::string& why) {
    errors.push_back("line " + std::to_string(entry.line) + ": " + entry.key + ": " + why);
  };
  const auto as_int = [&](int& target) {
    if (const auto v = detail::parse_int(entry.value)) {
      target = static_cast<int>(*v);
    } else {
      fail("expected an integer, got `" + entry.value + "`");
    }
  };
  const auto as_double = [&](double& target) {
    if (const auto v = detail::parse_double(entry.value)) {
      target = *v;
    } else {
      fail("expected a number, got `" + entry.value + "`");
    }
  };

  if (entry.key == "n_t") {
    as_int(cfg.n_tx);
  } else if (entry.key == "n_r") {
    as_int(cfg.n_rx);
  } else if (entry.key == "subcarriers") {
    as_int(cfg.subcarriers);
  } else if (entry.key == "trials") {
    as_int(cfg.trials);
  } else if (entry.key == "samples") {
    as_int(cfg.samples);
  } else if (entry.key == "burn_in") {
    as_int(cfg.burn_in);
  } else if (entry.key == "seed") {
    if (const auto v = detail::parse_int(entry.value); v && *v >= 0) {
      cfg.seed = static_cast<std::uint64_t>(*v);
    } else {
      fail("expected a nonnegative integer seed");
    }
  } else if (entry.key == "noise_variance") {
    as_double(cfg.noise_variance);
  } else if (entry.key == "tx_power") {
    as_double(cfg.tx_power);
  } else if (entry.key == "threads") {
    as_int(cfg.threads);
  } else if (entry.key == "methods") {
    if (entry.value == "conventional") {
      cfg.methods = MethodSelection::conventional;
    } else if (entry.value == "proposed") {
      cfg.methods = MethodSelection::proposed;
    } else if (entry.value == "both") {
      cfg.methods = MethodSelection::both;
    } else {
      fail("expected conventional|proposed|both");
    }
  } else if (entry.key == "channel.mode") {
    if (entry.value == "gauss_markov") {
      cfg.channel_mode = ChannelMode::gauss_markov;
    } else if (entry.value == "jakes") {
      cfg.channel_mode = ChannelMode::jakes;
    } else {
      fail("expected gauss_markov|jakes");
    }
  } else if (entry.key == "channel.tau") {
    if (const auto v = detail::parse_double(entry.value)) {
      cfg.tau_sweep = {*v};
    } else {
      fail("expected a number, got `" + entry.value + "`");
    }
  } else if (entry.key == "channel.order") {
    as_int(cfg.order);
  } else if (entry.key == "channel.doppler") {
    as_double(cfg.doppler);
  } else if (entry.key == "sweep.bits") {
    if (const auto v = detail::parse_int_list(entry.value)) {
      cfg.bits_sweep = *v;
    } else {
      fail("expected an integer list or range, e.g. `1..10`");
    }
  } else if (entry.key == "sweep.tau") {
    if (const auto v = detail::parse_double_list(entry.value)) {
      cfg.tau_sweep = *v;
    } else {
      fail("expected a number list or grid, e.g. `0:0.1:1`");
    }
  } else if (entry.key == "session.init_length") {
    as_int(cfg.init_length);
  } else if (entry.key == "session.epsilon") {
    as_double(cfg.epsilon);
  } else if (entry.key == "session.kappa") {
    as_double(cfg.kappa);
  } else if (entry.key == "session.estimator") {
    if (entry.value == "filtered") {
      cfg.estimator = EstimatorKind::filtered;
    } else if (entry.value == "raw") {
      cfg.estimator = EstimatorKind::raw_observation;
    } else {
      fail("expected filtered|raw");
    }
  } else {
    fail("unknown key");
  }
}

/// Parses a whole config file on top of the given defaults.
inline ExperimentConfig parse_experiment_config(const std::string& text,
                                                std::vector<std::string>& errors,
                                                ExperimentConfig base = {}) {
  for (const ConfigEntry& entry : parse_config_entries(text, errors)) {
    apply_config_entry(base, entry, errors);
  }
  return base;
}

}  // namespace csifb
