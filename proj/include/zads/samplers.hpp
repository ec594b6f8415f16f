#pragma once

// Reverse-diffusion reconstruction: the DDIM update shared by every solver,
// DPS (gradient guidance), DDS (CG data consistency with one fixed weight) and
// the ZADS forward pass (CG restricted to the theta columns with one weight per
// step).

#include <cmath>
#include <cstdint>
#include <vector>

#include "zads/linalg.hpp"
#include "zads/mri_model.hpp"
#include "zads/priors.hpp"
#include "zads/schedules.hpp"
#include "zads/ssdu.hpp"

namespace zads {

enum class NoiseMode {
  kFresh,       // one sequential RNG stream per pass
  kReplayBank,  // random-access draws addressed by (seed, epoch, step)
};

struct SamplerConfig {
  NoiseSchedule schedule = make_linear_schedule(1000);
  StepSequence seq = make_banded_sequence(1000, default_irregular_bands());
  double eta = 0.85;
  CgConfig cg{15, 0.0};
  std::uint64_t seed = 0;
  NoiseMode noise_mode = NoiseMode::kReplayBank;
  bool keep_trajectory = true;
};

/// Per-step data-fidelity weights, stored as log(zeta) so they stay positive.
/// Entry i belongs to step tau_i (ascending timestep order).
struct FidelityWeights {
  std::vector<double> log_zeta;

  static FidelityWeights constant(int steps, double zeta);
  int size() const noexcept { return static_cast<int>(log_zeta.size()); }
  double zeta(int i) const { return std::exp(log_zeta.at(i)); }
  std::vector<double> zetas() const;
};

struct StepRecord {
  int tau = 0;
  double zeta = 0.0;
  ComplexImage x_t;
  ComplexImage eps_hat;
  ComplexImage x0_hat;
  ComplexImage x0_refined;
  ComplexImage z;  // empty when no noise was injected
};

/// records[i] belongs to tau_i; the sampler fills them from i = S-1 down to 0.
struct Trajectory {
  std::vector<StepRecord> records;
  ComplexImage x0;
};

struct Reconstruction {
  ComplexImage x0;
  Trajectory trajectory;
};

/// Reproducible noise for the samplers: the initial state x_T and the DDIM
/// noise z for every (epoch, step). Immutable and shareable.
class NoiseBank {
 public:
  NoiseBank(std::uint64_t seed, int height, int width) : seed_(seed), height_(height), width_(width) {}
  ComplexImage initial_state() const;
  ComplexImage step_noise(int epoch, int step) const;

 private:
  std::uint64_t seed_;
  int height_;
  int width_;
};

/// sqrt(ab_prev) x0_ref + sqrt(1 - ab_prev - sigma^2) eps_hat + sigma z.
/// `z` may be empty when sigma = 0.
ComplexImage ddim_step(const NoiseSchedule& sched, int tau_i, int tau_prev,
                       const ComplexImage& x0_ref, const ComplexImage& eps_hat, double eta,
                       const ComplexImage& z);

/// Unconditional DDIM from the bank's initial state.
Reconstruction ddim_reconstruct(const ScorePrior& prior, int height, int width,
                                const SamplerConfig& cfg);

/// Value and x_t-gradient of ||y - E x0_hat(x_t)||^2. The gradient is
/// d/dRe + i d/dIm. Exact through the prior Jacobian when available,
/// otherwise d x0_hat / d x_t is taken as I / sqrt(ab).
struct LikelihoodGradient {
  double loss = 0.0;
  ComplexImage gradient;
  TweedieEstimate tweedie;
};
LikelihoodGradient dps_likelihood_gradient(const ScorePrior& prior, const EncodingOperator& op,
                                           const MultiCoilKSpace& y, const ComplexImage& x_t, int t,
                                           const NoiseSchedule& sched);

Reconstruction dps_reconstruct(const ScorePrior& prior, const EncodingOperator& op,
                               const MultiCoilKSpace& y, double zeta, const SamplerConfig& cfg);

Reconstruction dds_reconstruct(const ScorePrior& prior, const EncodingOperator& op,
                               const MultiCoilKSpace& y, double zeta, const SamplerConfig& cfg);

/// Everything a ZADS pass needs, with the theta/lambda restrictions resolved
/// once.
struct ZadsProblem {
  const ScorePrior* prior = nullptr;
  EncodingOperator op;
  MultiCoilKSpace y;
  SsduSplit split;
  EncodingOperator op_theta;
  EncodingOperator op_lambda;
  MultiCoilKSpace y_theta;
  MultiCoilKSpace y_lambda;
  ComplexImage adjoint_y_theta;
  ComplexImage adjoint_y;

  static ZadsProblem make(const ScorePrior& prior, EncodingOperator op, MultiCoilKSpace y,
                          SsduSplit split);
  /// Same data and split, different prior.
  ZadsProblem with_prior(const ScorePrior& other) const;
};

/// One pass: Tweedie, CG on (E_theta^H E_theta + zeta_i I) warm-started at the
/// Tweedie estimate, DDIM step. Only y on theta columns is read. `epoch`
/// addresses the noise bank.
Reconstruction zads_forward(const ZadsProblem& problem, const FidelityWeights& w,
                            const SamplerConfig& cfg, const ComplexImage& x_T, int epoch = 0);

/// The same pass with every acquired column (E_Omega, y_Omega): DDS with one
/// weight per step. Used to apply tuned weights to the full measurement.
Reconstruction zads_inference(const ZadsProblem& problem, const FidelityWeights& w,
                              const SamplerConfig& cfg, const ComplexImage& x_T, int epoch = 0);

}  // namespace zads
