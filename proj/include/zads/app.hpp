#pragma once

// Command implementations behind the `zads` executable. Each cmd_* writes its
// outputs plus manifest.json into `out`; the run_* functions are the same
// computations without any file I/O.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zads/config.hpp"
#include "zads/metrics.hpp"

namespace zads::app {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kConfigFailure = 2, kNumericalFailure = 3, kIoFailure = 4 };

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// Measured data plus, for simulated scenes, the ground truth.
struct Scene {
  std::optional<ComplexImage> truth;
  std::shared_ptr<const CoilSensitivities> sens;
  SamplingMask mask;
  MultiCoilKSpace y;
};

Scene simulate_scene(const Config& c);
/// Reads kspace.npy, coils.npy, mask.npy and (if present) image.npy.
Scene load_scene(const std::filesystem::path& dir, const Config& c);
/// load_scene(c.inputs) when inputs is set, simulate_scene otherwise.
Scene resolve_scene(const Config& c);

GaussianPrior make_gaussian_prior(const Config& c);
std::unique_ptr<ScorePrior> make_prior(const Config& c);

SsduSplit make_split(const Config& c, const SamplingMask& mask);

struct ReconstructResult {
  ComplexImage x0;
  Trajectory trajectory;
  std::optional<MetricPair> metrics;
  double holdout_loss = 0.0;
  long long nfe = 0;
  std::optional<FidelityWeights> weights;  // zads only
  std::optional<TuneReport> tuning;        // zads without a weights file
};

/// `weights` is used for zads when given; otherwise zads tunes first.
ReconstructResult run_reconstruct(const Config& c, const Scene& scene, const ScorePrior& prior,
                                  const std::optional<FidelityWeights>& weights = std::nullopt);

struct SweepRow {
  double zeta = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double holdout_loss = 0.0;
};

/// One dds reconstruction per grid value, rows ascending in zeta.
std::vector<SweepRow> run_sweep(const Config& c, const Scene& scene, const ScorePrior& prior);

FidelityWeights read_weights(const std::filesystem::path& path, int steps);
void write_weights(const std::filesystem::path& path, const FidelityWeights& w, const StepSequence& seq);

void cmd_simulate(const Config& c, const std::filesystem::path& out);
void cmd_reconstruct(const Config& c, const std::filesystem::path& out);
void cmd_tune(const Config& c, const std::filesystem::path& out);
void cmd_sweep(const Config& c, const std::filesystem::path& out);
/// Prints "psnr,ssim" to stdout; writes eval.csv and a manifest when `out` is set.
MetricPair cmd_eval(const std::filesystem::path& ref, const std::filesystem::path& test,
                    const std::optional<std::filesystem::path>& out);

/// Formats a PSNR value; the identical-image sentinel prints as "inf".
std::string format_metric(double v);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace zads::app
