#pragma once

#include <vector>

namespace zads {

/// DDPM variance schedule over timesteps t = 1..T. Arrays are 0-based, so
/// beta()[0] belongs to t = 1. alpha_bar_at(0) is the virtual clean state, 1.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> beta);

  int steps() const noexcept { return static_cast<int>(beta_.size()); }
  const std::vector<double>& beta() const noexcept { return beta_; }
  const std::vector<double>& alpha() const noexcept { return alpha_; }
  const std::vector<double>& alpha_bar() const noexcept { return alpha_bar_; }

  /// Cumulative product at timestep t in [0, T].
  double alpha_bar_at(int t) const;

 private:
  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
};

NoiseSchedule make_linear_schedule(int T, double beta_start = 1e-4, double beta_end = 0.02);

/// Strictly increasing timestep indices tau_1 < ... < tau_S in [1, T].
/// Samplers walk it from tau_S down to tau_1.
struct StepSequence {
  std::vector<int> tau;

  int size() const noexcept { return static_cast<int>(tau.size()); }
  /// Timestep the sampler moves to after tau[i]; 0 after the last step.
  int previous(int i) const noexcept { return i == 0 ? 0 : tau[i - 1]; }
};

/// S indices rounded from an even grid over [1, T] with both endpoints.
/// S = 1 yields {T}.
StepSequence make_uniform_sequence(int T, int S);

/// One band of an irregular schedule: `steps` indices spread uniformly over
/// (previous upper fraction, upper_fraction] of T.
struct Band {
  double upper_fraction;
  int steps;
};

/// Piecewise-uniform sequence. Bands are listed from low to high noise and
/// their upper fractions must increase strictly to 1.
StepSequence make_banded_sequence(int T, const std::vector<Band>& bands);

/// "17,5,3": 17 steps in (0, 0.1]T, 5 in (0.1, 0.5]T, 3 in (0.5, 1]T.
std::vector<Band> default_irregular_bands();

/// DDIM stochasticity
/// eta * sqrt((1 - ab_prev) / (1 - ab_i) * (1 - ab_i / ab_prev)).
double sigma(const NoiseSchedule& sched, int tau_i, int tau_prev, double eta);

}  // namespace zads
