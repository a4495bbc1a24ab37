// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: preset or file-based configuration, flag
// overrides, CSV output with a provenance preamble, and an optional
// per-step trace sidecar.

#pragma once

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csifb/experiment.hpp"

namespace csifb {

namespace detail {

inline std::string format_double_compact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

inline std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += (i ? "," : "") + std::to_string(values[i]);
  }
  return out;
}

inline std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += (i ? "," : "") + format_double_compact(values[i]);
  }
  return out;
}

/// Echo of the effective configuration. Every value here is an artifact
/// default unless the user overrode it; the echo is what makes a CSV
/// self-describing and reruns byte-comparable.
inline std::vector<std::string> provenance(const ExperimentConfig& cfg) {
  std::vector<std::string> lines;
  lines.push_back("csifb-sim sweep results");
  lines.push_back("seed = " + std::to_string(cfg.seed));
  lines.push_back("trials = " + std::to_string(cfg.trials));
  lines.push_back("samples_per_trial = " + std::to_string(cfg.samples));
  lines.push_back("init_length = " + std::to_string(cfg.init_length));
  lines.push_back("burn_in = " + std::to_string(cfg.burn_in));
  lines.push_back("antennas = " + std::to_string(cfg.n_tx) + "x" + std::to_string(cfg.n_rx) +
                  ", subcarriers = " + std::to_string(cfg.subcarriers));
  if (cfg.channel_mode == ChannelMode::gauss_markov) {
    lines.push_back("channel = gauss_markov, tau = " + join_doubles(cfg.tau_sweep));
  } else {
    lines.push_back("channel = jakes, order = " + std::to_string(cfg.order) +
                    ", doppler = " + format_double_compact(cfg.doppler));
  }
  lines.push_back("bits = " + join_ints(cfg.bits_sweep));
  lines.push_back("methods = " + std::string(cfg.methods == MethodSelection::both
                                                 ? "both"
                                                 : (cfg.methods == MethodSelection::proposed
                                                        ? "proposed"
                                                        : "conventional")));
  lines.push_back("noise_variance = " + format_double_compact(cfg.noise_variance) +
                  " (pilot noise; simulation choice)");
  lines.push_back("tx_power = " + format_double_compact(cfg.tx_power));
  lines.push_back("epsilon = " + format_double_compact(cfg.epsilon) +
                  ", kappa = " + format_double_compact(cfg.kappa));
  lines.push_back(std::string("estimator = ") +
                  (cfg.estimator == EstimatorKind::filtered ? "filtered" : "raw"));
  lines.push_back("metrics window = prediction phase (instants after init_length)");
  return lines;
}

inline void write_trace_sidecar(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open trace sidecar " + path.string() + " for writing");
  }
  out << "tag,time_index,phase,message,bit_cost,delta_abs,hbs_re,hbs_im,pred_re,pred_im,link\n";
  std::vector<bool> proposed_values;
  if (cfg.methods != MethodSelection::proposed) {
    proposed_values.push_back(false);
  }
  if (cfg.methods != MethodSelection::conventional) {
    proposed_values.push_back(true);
  }
  const std::vector<double> taus =
      cfg.channel_mode == ChannelMode::gauss_markov ? cfg.tau_sweep : std::vector<double>{0.0};
  SessionRunOptions options;
  options.collect_records = true;
  for (bool proposed : proposed_values) {
    for (double tau : taus) {
      const FadingConfig fading = detail::make_fading(cfg, tau);
      for (int bits : cfg.bits_sweep) {
        // Trial 0 of every grid point; full traces of every trial would be
        // enormous and add nothing for diagnostics.
        SessionResult result;
        run_single_trial(cfg, fading, bits, proposed, 0, options, &result);
        const std::string tag = std::string(proposed ? "proposed" : "conventional") + ";tau=" +
                                format_double_compact(tau) + ";bits=" + std::to_string(bits);
        for (const StepRecord& r : result.records) {
          out << tag << ',' << r.time_index << ',' << to_string(r.phase) << ','
              << to_string(r.kind) << ',' << r.bit_cost << ',' << format_double(r.delta_abs)
              << ',' << format_double(r.reconstructed.real()) << ','
              << format_double(r.reconstructed.imag()) << ',' << format_double(r.prediction.real())
              << ',' << format_double(r.prediction.imag()) << ',' << r.link << "\n";
        }
      }
    }
  }
}

}  // namespace detail

/// Entry point shared by the binary and the tests. Returns 0 on success.
inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Link-level simulator for predictive CSI feedback"};
  app.footer("Run `--preset fig3 --out fig3.csv` for the bits sweep or "
             "`--preset fig4 --out fig4.csv` for the tau sweep.");

  std::string config_path;
  std::string preset;
  std::string sweep_override;
  std::string out_path = "results.csv";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;
  bool verbose = false;

  app.add_option("--config", config_path, "Key-value experiment configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--preset", preset, "Built-in experiment grid")
      ->check(CLI::IsMember({"fig3", "fig4"}));
  app.add_option("--seed", seed, "Master seed override")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--sweep", sweep_override, "Swept axis override with its default grid")
      ->check(CLI::IsMember({"bits", "tau"}));
  app.add_option("--out", out_path, "CSV destination path");
  app.add_option("--threads", threads, "Worker thread count (0 = all cores)");
  app.add_flag("--verbose", verbose, "Write a per-step trace sidecar next to the CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (config_path.empty() && preset.empty()) {
    std::fputs(app.help().c_str(), stderr);
    std::fputs("error: need --config or --preset\n", stderr);
    return 1;
  }
  if (!config_path.empty() && !preset.empty()) {
    std::fputs("error: --config and --preset are mutually exclusive\n", stderr);
    return 1;
  }

  try {
    ExperimentConfig cfg;
    if (!preset.empty()) {
      cfg = preset == "fig3" ? preset_fig3() : preset_fig4();
    } else {
      std::ifstream in(config_path, std::ios::binary);
      std::stringstream buffer;
      buffer << in.rdbuf();
      std::vector<std::string> errors;
      cfg = parse_experiment_config(buffer.str(), errors);
      if (!errors.empty()) {
        std::fprintf(stderr, "error: %s is not a valid configuration:\n", config_path.c_str());
        for (const std::string& e : errors) {
          std::fprintf(stderr, "  - %s\n", e.c_str());
        }
        return 1;
      }
    }
    if (seed_set) {
      cfg.seed = seed;
    }
    if (threads >= 0) {
      cfg.threads = threads;
    }
    if (sweep_override == "bits") {
      cfg.bits_sweep = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    } else if (sweep_override == "tau") {
      cfg.tau_sweep = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
      if (cfg.bits_sweep.size() > 2) {
        cfg.bits_sweep = {1, 2};
      }
    }

    const ResultTable table = run_sweep(cfg);
    const std::vector<std::string> preamble = detail::provenance(cfg);
    emit_csv(table, out_path, preamble);
    if (verbose) {
      detail::write_trace_sidecar(cfg, out_path + ".trace.csv");
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace csifb
