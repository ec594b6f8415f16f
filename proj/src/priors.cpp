#include "zads/priors.hpp"

#include <cmath>
#include <string>

#include "zads/errors.hpp"
#include "zads/fft.hpp"
#include "zads/rng.hpp"

namespace zads {

ComplexImage ScorePrior::noise_jacobian(const ComplexImage&, int, double) const {
  throw Error("score prior does not provide an exact Jacobian");
}

ComplexImage ScorePrior::noise_jacobian_adjoint(const ComplexImage&, int, double) const {
  throw Error("score prior does not provide an exact Jacobian");
}

// ---------------------------------------------------------------------------

ComplexImage ZeroScorePrior::predict_noise(const ComplexImage& x_t, int, double) const {
  return ComplexImage(x_t.height(), x_t.width());
}

ComplexImage ZeroScorePrior::noise_jacobian(const ComplexImage& v, int, double) const {
  return ComplexImage(v.height(), v.width());
}

ComplexImage ZeroScorePrior::noise_jacobian_adjoint(const ComplexImage& v, int, double) const {
  return ComplexImage(v.height(), v.width());
}

// ---------------------------------------------------------------------------

GaussianPrior::GaussianPrior(ComplexImage mean, std::vector<double> spectrum)
    : mean_(std::move(mean)), spectrum_(std::move(spectrum)) {
  if (spectrum_.size() != mean_.size())
    throw DimensionMismatch("GaussianPrior: spectrum length does not match the mean image");
  for (double s : spectrum_)
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("GaussianPrior: spectrum must be >= 0");
}

std::vector<double> GaussianPrior::power_law_spectrum(int height, int width, double pixel_variance,
                                                      double corner, double exponent) {
  if (!(pixel_variance >= 0.0) || !(corner > 0.0))
    throw InvalidArgument("power_law_spectrum: need variance >= 0 and corner > 0");
  std::vector<double> s(static_cast<std::size_t>(height) * width);
  double total = 0.0;
  for (int r = 0; r < height; ++r) {
    const double ky = r - height / 2;
    for (int c = 0; c < width; ++c) {
      const double kx = c - width / 2;
      const double k2 = (kx * kx + ky * ky) / (corner * corner);
      const double v = std::pow(1.0 + k2, -exponent);
      s[static_cast<std::size_t>(r) * width + c] = v;
      total += v;
    }
  }
  // unitary basis: mean pixel variance = mean over modes
  const double scale = pixel_variance * static_cast<double>(s.size()) / total;
  for (auto& v : s) v *= scale;
  return s;
}

ComplexImage GaussianPrior::filter(const ComplexImage& v, double alpha_bar) const {
  ComplexImage k = fft::forward(v);
  for (std::size_t i = 0; i < k.size(); ++i)
    k[i] /= alpha_bar * spectrum_[i] + (1.0 - alpha_bar);
  return fft::inverse(k);
}

ComplexImage GaussianPrior::predict_noise(const ComplexImage& x_t, int, double alpha_bar) const {
  require_same_shape(x_t, mean_, "GaussianPrior::predict_noise");
  ComplexImage centered = x_t;
  centered -= std::sqrt(alpha_bar) * mean_;
  ComplexImage eps = filter(centered, alpha_bar);
  eps *= std::sqrt(1.0 - alpha_bar);
  return eps;
}

ComplexImage GaussianPrior::noise_jacobian(const ComplexImage& v, int, double alpha_bar) const {
  require_same_shape(v, mean_, "GaussianPrior::noise_jacobian");
  ComplexImage out = filter(v, alpha_bar);
  out *= std::sqrt(1.0 - alpha_bar);
  return out;
}

ComplexImage GaussianPrior::noise_jacobian_adjoint(const ComplexImage& v, int t,
                                                   double alpha_bar) const {
  // real diagonal in a unitary basis: self-adjoint
  return noise_jacobian(v, t, alpha_bar);
}

ComplexImage GaussianPrior::apply_sqrt_covariance(const ComplexImage& v) const {
  require_same_shape(v, mean_, "GaussianPrior::apply_sqrt_covariance");
  ComplexImage k = fft::forward(v);
  for (std::size_t i = 0; i < k.size(); ++i) k[i] *= std::sqrt(spectrum_[i]);
  return fft::inverse(k);
}

ComplexImage GaussianPrior::sample(std::uint64_t seed) const {
  ComplexImage n = complex_gaussian_image(height(), width(), seed);
  return mean_ + apply_sqrt_covariance(n);
}

double GaussianPrior::tweedie_error_trace(double alpha_bar) const {
  double total = 0.0;
  for (double s : spectrum_) total += s * (1.0 - alpha_bar) / (alpha_bar * s + 1.0 - alpha_bar);
  return total;
}

ComplexImage gaussian_predict_noise(const GaussianPrior& p, const ComplexImage& x_t, int t,
                                    const NoiseSchedule& sched) {
  return p.predict_noise(x_t, t, sched.alpha_bar_at(t));
}

// ---------------------------------------------------------------------------

FrozenNoisePrior::FrozenNoisePrior(std::map<int, ComplexImage> eps_by_timestep)
    : eps_(std::move(eps_by_timestep)) {}

ComplexImage FrozenNoisePrior::predict_noise(const ComplexImage& x_t, int t, double) const {
  auto it = eps_.find(t);
  if (it == eps_.end())
    throw InvalidArgument("FrozenNoisePrior: no recorded prediction for timestep " + std::to_string(t));
  require_same_shape(x_t, it->second, "FrozenNoisePrior::predict_noise");
  return it->second;
}

ComplexImage FrozenNoisePrior::noise_jacobian(const ComplexImage& v, int, double) const {
  return ComplexImage(v.height(), v.width());
}

ComplexImage FrozenNoisePrior::noise_jacobian_adjoint(const ComplexImage& v, int, double) const {
  return ComplexImage(v.height(), v.width());
}

// ---------------------------------------------------------------------------

ComplexImage CountingPrior::predict_noise(const ComplexImage& x_t, int t, double alpha_bar) const {
  ++count_;
  return inner_.predict_noise(x_t, t, alpha_bar);
}

ComplexImage CountingPrior::noise_jacobian(const ComplexImage& v, int t, double alpha_bar) const {
  return inner_.noise_jacobian(v, t, alpha_bar);
}

ComplexImage CountingPrior::noise_jacobian_adjoint(const ComplexImage& v, int t,
                                                   double alpha_bar) const {
  return inner_.noise_jacobian_adjoint(v, t, alpha_bar);
}

// ---------------------------------------------------------------------------

TweedieEstimate tweedie_denoise(const ScorePrior& prior, const ComplexImage& x_t, int t,
                                const NoiseSchedule& sched) {
  const double ab = sched.alpha_bar_at(t);
  ComplexImage eps = prior.predict_noise(x_t, t, ab);
  if (!eps.same_shape(x_t)) throw DimensionMismatch("tweedie_denoise: prior changed the image shape");
  ComplexImage x0 = x_t;
  x0 -= std::sqrt(1.0 - ab) * eps;
  x0 *= 1.0 / std::sqrt(ab);
  return {std::move(x0), std::move(eps)};
}

}  // namespace zads
