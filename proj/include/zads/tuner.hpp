#pragma once

// Test-time tuning of the per-step fidelity weights against the held-out
// (lambda) measurements.

#include <vector>

#include "zads/samplers.hpp"

namespace zads {

enum class GradientMode { kFiniteDifference, kReplayAnalytic };
enum class OptimizerKind { kGradientDescent, kAdam };

struct TunerConfig {
  int epochs = 10;
  double learning_rate = 0.1;  // step on log(zeta)
  GradientMode grad_mode = GradientMode::kReplayAnalytic;
  double fd_step = 1e-3;       // perturbation of log(zeta)
  OptimizerKind optimizer = OptimizerKind::kGradientDescent;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double init_zeta = 1.0;
  /// Draw fresh DDIM noise every epoch (bank slice = epoch); off reuses slice 0.
  bool redraw_noise_per_epoch = true;
  /// Draw a new theta/lambda split every epoch (seed derived from the
  /// original split seed and the epoch). Off keeps the initial split.
  bool redraw_split_per_epoch = false;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::vector<double> zeta;  // weights used in this epoch's pass
};

struct TuneReport {
  std::vector<EpochRecord> epochs;
  FidelityWeights final_weights;
  /// Reconstruction with the final weights on the epoch-0 noise slice, so
  /// final_loss is comparable with epochs.front().loss.
  ComplexImage x0;
  double final_loss = 0.0;
  long long tuning_nfe = 0;  // score evaluations inside the epoch loop
  long long total_nfe = 0;   // including gradient probes and the final pass
};

/// ||y_L - E_L x0||_1 / ||y_L||_1 + ||y_L - E_L x0||_2 / ||y_L||_2, with the
/// l1 norm of a complex vector taken as the sum of moduli.
double holdout_loss(const MultiCoilKSpace& y_lambda, const EncodingOperator& op_lambda,
                    const ComplexImage& x0);

/// Gradient of holdout_loss w.r.t. x0 (d/dRe + i d/dIm); the subgradient of
/// |r| at r = 0 is taken as 0.
ComplexImage holdout_loss_gradient(const MultiCoilKSpace& y_lambda, const EncodingOperator& op_lambda,
                                   const ComplexImage& x0);

/// Central differences of the held-out loss on log(zeta), 2S full passes on
/// the replay bank slice `epoch`. Probes run concurrently.
std::vector<double> fd_gradient(const ZadsProblem& problem, const FidelityWeights& w,
                                const TunerConfig& tcfg, const SamplerConfig& scfg,
                                const ComplexImage& x_T, int epoch);

/// Forward-mode tangents d x0 / d log(zeta_j) of the replayed sampler (noise
/// predictions and DDIM noise frozen from `traj`), one per weight.
std::vector<ComplexImage> replay_tangents(const Trajectory& traj, const EncodingOperator& op_theta,
                                          const FidelityWeights& w, const SamplerConfig& scfg);

/// Exact gradient of the held-out loss of the replayed sampler w.r.t. log(zeta),
/// by a reverse sweep with one CG solve per step. Equals the projections of
/// replay_tangents onto the loss gradient.
std::vector<double> replay_analytic_gradient(const Trajectory& traj, const ZadsProblem& problem,
                                             const FidelityWeights& w, const SamplerConfig& scfg);

/// The epoch loop. Requires scfg.noise_mode == kReplayBank.
TuneReport tune(const ZadsProblem& problem, const TunerConfig& tcfg, const SamplerConfig& scfg);

}  // namespace zads
