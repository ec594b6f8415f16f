#include "zads/schedules.hpp"

#include <cmath>
#include <string>

#include "zads/errors.hpp"

namespace zads {

NoiseSchedule::NoiseSchedule(std::vector<double> beta) : beta_(std::move(beta)) {
  if (beta_.empty()) throw InvalidArgument("NoiseSchedule: T must be >= 1");
  alpha_.resize(beta_.size());
  alpha_bar_.resize(beta_.size());
  double prod = 1.0;
  for (std::size_t t = 0; t < beta_.size(); ++t) {
    if (!(beta_[t] > 0.0 && beta_[t] < 1.0))
      throw InvalidArgument("NoiseSchedule: beta must lie in (0, 1)");
    alpha_[t] = 1.0 - beta_[t];
    prod *= alpha_[t];
    alpha_bar_[t] = prod;
  }
}

double NoiseSchedule::alpha_bar_at(int t) const {
  if (t == 0) return 1.0;
  if (t < 0 || t > steps())
    throw InvalidArgument("alpha_bar_at: timestep " + std::to_string(t) + " outside [0, " +
                          std::to_string(steps()) + "]");
  return alpha_bar_[t - 1];
}

NoiseSchedule make_linear_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw InvalidArgument("make_linear_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw InvalidArgument("make_linear_schedule: need 0 < beta_start <= beta_end < 1");
  std::vector<double> beta(T);
  for (int t = 0; t < T; ++t)
    beta[t] = T == 1 ? beta_start : beta_start + (beta_end - beta_start) * t / (T - 1);
  return NoiseSchedule(std::move(beta));
}

namespace {

// round(lo + k (hi - lo) / (n - 1)), k = 0..n-1; n = 1 gives {hi}
std::vector<int> spread(int lo, int hi, int n) {
  std::vector<int> out;
  if (n == 1) return {hi};
  const double step = static_cast<double>(hi - lo) / (n - 1);
  for (int k = 0; k < n; ++k) out.push_back(static_cast<int>(std::lround(lo + k * step)));
  return out;
}

}  // namespace

StepSequence make_uniform_sequence(int T, int S) {
  if (T < 1) throw InvalidArgument("make_uniform_sequence: T must be >= 1");
  if (S < 1 || S > T) throw InvalidArgument("make_uniform_sequence: need 1 <= S <= T");
  return StepSequence{spread(1, T, S)};
}

StepSequence make_banded_sequence(int T, const std::vector<Band>& bands) {
  if (T < 1) throw InvalidArgument("make_banded_sequence: T must be >= 1");
  if (bands.empty()) throw InvalidArgument("make_banded_sequence: no bands");
  StepSequence seq;
  double lower_fraction = 0.0;
  int lower_index = 0;  // last timestep covered by the previous band
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const auto& band = bands[b];
    if (!(band.upper_fraction > lower_fraction))
      throw InvalidArgument("make_banded_sequence: band " + std::to_string(b) +
                            " overlaps the previous band");
    if (band.upper_fraction > 1.0)
      throw InvalidArgument("make_banded_sequence: band fraction exceeds 1");
    if (band.steps < 1)
      throw InvalidArgument("make_banded_sequence: band " + std::to_string(b) + " has no steps");
    const int hi = b + 1 == bands.size() ? T : static_cast<int>(std::floor(band.upper_fraction * T));
    const int lo = lower_index + 1;
    if (hi - lo + 1 < band.steps)
      throw InvalidArgument("make_banded_sequence: band " + std::to_string(b) + " covers " +
                            std::to_string(std::max(0, hi - lo + 1)) + " timesteps but needs " +
                            std::to_string(band.steps));
    for (int t : spread(lo, hi, band.steps)) seq.tau.push_back(t);
    lower_fraction = band.upper_fraction;
    lower_index = hi;
  }
  if (std::abs(lower_fraction - 1.0) > 1e-12)
    throw InvalidArgument("make_banded_sequence: bands leave (" + std::to_string(lower_fraction) +
                          ", 1] uncovered");
  return seq;
}

std::vector<Band> default_irregular_bands() { return {{0.1, 17}, {0.5, 5}, {1.0, 3}}; }

double sigma(const NoiseSchedule& sched, int tau_i, int tau_prev, double eta) {
  if (tau_prev >= tau_i) throw InvalidArgument("sigma: tau_prev must precede tau_i");
  const double ab_i = sched.alpha_bar_at(tau_i);
  const double ab_prev = sched.alpha_bar_at(tau_prev);
  const double v = (1.0 - ab_prev) / (1.0 - ab_i) * (1.0 - ab_i / ab_prev);
  return eta * std::sqrt(std::max(0.0, v));
}

}  // namespace zads
