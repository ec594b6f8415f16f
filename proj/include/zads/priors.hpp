#pragma once

// Score models eps_hat = eps(x_t, t). The samplers only see ScorePrior; the
// built-in priors are analytic so every sampler path has a closed-form check.

#include <atomic>
#include <cstdint>
#include <map>
#include <vector>

#include "zads/image.hpp"
#include "zads/schedules.hpp"

namespace zads {

class ScorePrior {
 public:
  virtual ~ScorePrior() = default;

  /// Predicted noise for state x_t at timestep t with cumulative alpha_bar.
  virtual ComplexImage predict_noise(const ComplexImage& x_t, int t, double alpha_bar) const = 0;

  virtual bool has_exact_jacobian() const noexcept { return false; }
  /// (d eps_hat / d x_t) v. Throws unless has_exact_jacobian().
  virtual ComplexImage noise_jacobian(const ComplexImage& v, int t, double alpha_bar) const;
  /// (d eps_hat / d x_t)^H v. Throws unless has_exact_jacobian().
  virtual ComplexImage noise_jacobian_adjoint(const ComplexImage& v, int t, double alpha_bar) const;
};

/// eps_hat = 0. Tweedie then returns x_t / sqrt(alpha_bar).
class ZeroScorePrior final : public ScorePrior {
 public:
  ComplexImage predict_noise(const ComplexImage& x_t, int t, double alpha_bar) const override;
  bool has_exact_jacobian() const noexcept override { return true; }
  ComplexImage noise_jacobian(const ComplexImage& v, int t, double alpha_bar) const override;
  ComplexImage noise_jacobian_adjoint(const ComplexImage& v, int t, double alpha_bar) const override;
};

/// x0 ~ CN(mean, Sigma) with Sigma diagonal in the centered unitary Fourier
/// basis (per-mode variances `spectrum`, stored in the same layout as the
/// centered FFT output). The diffused marginal is Gaussian, so the noise
/// prediction is exact:
///   eps_hat = sqrt(1 - ab) (ab Sigma + (1 - ab) I)^-1 (x_t - sqrt(ab) mean).
class GaussianPrior final : public ScorePrior {
 public:
  GaussianPrior(ComplexImage mean, std::vector<double> spectrum);

  /// Isotropic power-law spectrum s(k) ~ 1 / (1 + (|k| / corner)^2)^exponent,
  /// |k| in cycles per field of view, scaled so the mean per-pixel variance is
  /// `pixel_variance`.
  static std::vector<double> power_law_spectrum(int height, int width, double pixel_variance,
                                                double corner, double exponent);

  const ComplexImage& mean() const noexcept { return mean_; }
  const std::vector<double>& spectrum() const noexcept { return spectrum_; }
  int height() const noexcept { return mean_.height(); }
  int width() const noexcept { return mean_.width(); }

  ComplexImage predict_noise(const ComplexImage& x_t, int t, double alpha_bar) const override;
  bool has_exact_jacobian() const noexcept override { return true; }
  ComplexImage noise_jacobian(const ComplexImage& v, int t, double alpha_bar) const override;
  ComplexImage noise_jacobian_adjoint(const ComplexImage& v, int t, double alpha_bar) const override;

  /// One draw x0 = mean + F^-1(sqrt(s) . n), n ~ CN(0, I).
  ComplexImage sample(std::uint64_t seed) const;
  /// Sigma^(1/2) v.
  ComplexImage apply_sqrt_covariance(const ComplexImage& v) const;
  /// Trace of Cov[x0 | x_t], i.e. the expected squared error of the Tweedie
  /// estimate when x0 is drawn from this prior.
  double tweedie_error_trace(double alpha_bar) const;

 private:
  ComplexImage filter(const ComplexImage& v, double alpha_bar) const;

  ComplexImage mean_;
  std::vector<double> spectrum_;
};

/// Replays recorded noise predictions keyed by timestep; used to evaluate the
/// sampler with the score network held fixed (stop-gradient through eps).
class FrozenNoisePrior final : public ScorePrior {
 public:
  explicit FrozenNoisePrior(std::map<int, ComplexImage> eps_by_timestep);
  ComplexImage predict_noise(const ComplexImage& x_t, int t, double alpha_bar) const override;
  bool has_exact_jacobian() const noexcept override { return true; }
  ComplexImage noise_jacobian(const ComplexImage& v, int t, double alpha_bar) const override;
  ComplexImage noise_jacobian_adjoint(const ComplexImage& v, int t, double alpha_bar) const override;

 private:
  std::map<int, ComplexImage> eps_;
};

/// Forwards to another prior and counts score evaluations (NFEs).
class CountingPrior final : public ScorePrior {
 public:
  explicit CountingPrior(const ScorePrior& inner) : inner_(inner) {}
  ComplexImage predict_noise(const ComplexImage& x_t, int t, double alpha_bar) const override;
  bool has_exact_jacobian() const noexcept override { return inner_.has_exact_jacobian(); }
  ComplexImage noise_jacobian(const ComplexImage& v, int t, double alpha_bar) const override;
  ComplexImage noise_jacobian_adjoint(const ComplexImage& v, int t, double alpha_bar) const override;
  long long evaluations() const noexcept { return count_.load(); }

 private:
  const ScorePrior& inner_;
  mutable std::atomic<long long> count_{0};
};

ComplexImage gaussian_predict_noise(const GaussianPrior& p, const ComplexImage& x_t, int t,
                                    const NoiseSchedule& sched);

struct TweedieEstimate {
  ComplexImage x0_hat;
  ComplexImage eps_hat;
};

/// x0_hat = (x_t - sqrt(1 - ab) eps_hat) / sqrt(ab).
TweedieEstimate tweedie_denoise(const ScorePrior& prior, const ComplexImage& x_t, int t,
                                const NoiseSchedule& sched);

}  // namespace zads
