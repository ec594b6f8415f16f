#pragma once

// Run configuration for the command-line driver. Parsed from JSON with every
// default materialized, so a manifest alone determines a run.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "zads/errors.hpp"
#include "zads/samplers.hpp"
#include "zads/tuner.hpp"

namespace zads::app {

inline constexpr int kSchemaVersion = 1;

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ImageConfig {
  int height = 64;
  int width = 64;
  std::string source = "gaussian_prior";  // phantom | gaussian_prior
};

struct PriorConfig {
  std::string kind = "gaussian";  // gaussian | zero | plugin
  std::string mean = "phantom";   // phantom | zero
  std::uint64_t mean_seed = 0;
  double pixel_variance = 0.02;
  double corner = 3.0;      // cycles per field of view
  double exponent = 1.5;
  std::string plugin;       // command line when kind == plugin
  double plugin_timeout_s = 30.0;
};

struct AcquisitionConfig {
  int coils = 4;
  int acceleration = 4;
  int acs = 8;
  double noise_std = 0.01;
};

struct ScheduleConfig {
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::string sequence = "banded";  // banded | uniform
  int steps = 25;                   // uniform only
  std::vector<Band> bands = {{0.1, 17}, {0.5, 5}, {1.0, 3}};
};

struct SamplerSettings {
  double eta = 0.85;
  int cg_iters = 15;
  double cg_tol = 0.0;
  std::string noise_mode = "replay_bank";  // replay_bank | fresh
  double zeta = 1.0;                       // fixed weight for dps / dds
  std::string weights_file;                // zads only
  std::string zads_data = "omega";         // columns used with tuned weights: omega | theta
  bool export_trajectory = false;
};

struct SsduConfig {
  double rho = 0.4;
  bool redraw_per_epoch = false;
};

struct TunerSettings {
  int epochs = 10;
  double learning_rate = 0.1;
  std::string grad_mode = "replay_analytic";  // replay_analytic | finite_difference
  double fd_step = 1e-3;
  std::string optimizer = "gd";  // gd | adam
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double init_zeta = 1.0;
  bool redraw_noise_per_epoch = true;
};

struct Config {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  std::string method = "zads";  // zf | dps | dds | zads
  std::string inputs;           // directory with simulate outputs; empty = simulate in memory
  ImageConfig image;
  PriorConfig prior;
  AcquisitionConfig acquisition;
  ScheduleConfig schedule;
  SamplerSettings sampler;
  SsduConfig ssdu;
  TunerSettings tuner;
  std::vector<double> sweep_grid = {0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0};
};

/// Sub-seeds derived from Config::seed.
struct Seeds {
  std::uint64_t phantom;
  std::uint64_t coils;
  std::uint64_t noise;
  std::uint64_t split;
  std::uint64_t sampler;
};
Seeds derive_seeds(std::uint64_t seed);

/// Unknown keys, wrong types and out-of-range values throw ConfigError.
Config parse_config(const nlohmann::json& j);
Config load_config(const std::filesystem::path& path);
nlohmann::json to_json(const Config& c);

NoiseSchedule build_schedule(const Config& c);
StepSequence build_sequence(const Config& c);
SamplerConfig build_sampler_config(const Config& c);
TunerConfig build_tuner_config(const Config& c);

}  // namespace zads::app
