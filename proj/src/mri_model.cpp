#include "zads/mri_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "zads/errors.hpp"
#include "zads/fft.hpp"
#include "zads/kernels.hpp"
#include "zads/rng.hpp"

namespace zads {

// ---------------------------------------------------------------------------
// SamplingMask

SamplingMask::SamplingMask(int width, std::vector<int> lines, int acceleration, int acs)
    : width_(width), acceleration_(acceleration), acs_(acs), lines_(std::move(lines)) {
  if (width <= 0) throw InvalidArgument("SamplingMask: width must be positive");
  std::sort(lines_.begin(), lines_.end());
  lines_.erase(std::unique(lines_.begin(), lines_.end()), lines_.end());
  flags_.assign(width, 0);
  for (int l : lines_) {
    if (l < 0 || l >= width)
      throw InvalidArgument("SamplingMask: line " + std::to_string(l) + " outside [0, " +
                            std::to_string(width) + ")");
    flags_[l] = 1;
  }
}

SamplingMask SamplingMask::full(int width) {
  std::vector<int> lines(width);
  for (int i = 0; i < width; ++i) lines[i] = i;
  return SamplingMask(width, std::move(lines), 1, 0);
}

bool SamplingMask::contains(int column) const {
  return column >= 0 && column < width_ && flags_[column] != 0;
}

bool SamplingMask::is_subset_of(const SamplingMask& other) const {
  if (width_ != other.width_) return false;
  return std::all_of(lines_.begin(), lines_.end(), [&](int l) { return other.contains(l); });
}

std::vector<int> SamplingMask::acs_lines() const {
  std::vector<int> out;
  const int begin = width_ / 2 - acs_ / 2;
  for (int i = 0; i < acs_; ++i) out.push_back(begin + i);
  return out;
}

SamplingMask make_equispaced_mask(int width, int acceleration, int acs) {
  if (width <= 0) throw InvalidArgument("make_equispaced_mask: width must be positive");
  if (acceleration < 1 || acceleration > width)
    throw InvalidArgument("make_equispaced_mask: R must lie in [1, width]");
  if (acs < 0 || acs > width) throw InvalidArgument("make_equispaced_mask: acs must lie in [0, width]");
  std::vector<int> lines;
  for (int c = 0; c < width; c += acceleration) lines.push_back(c);
  const int begin = width / 2 - acs / 2;
  if (begin < 0 || begin + acs > width)
    throw InvalidArgument("make_equispaced_mask: ACS block does not fit");
  for (int i = 0; i < acs; ++i) lines.push_back(begin + i);
  return SamplingMask(width, std::move(lines), acceleration, acs);
}

// ---------------------------------------------------------------------------
// containers

std::span<const Complex> CoilSensitivities::coil(int c) const {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  return std::span<const Complex>(maps).subspan(c * n, n);
}

ComplexImage CoilSensitivities::coil_image(int c) const {
  auto s = coil(c);
  return ComplexImage(height, width, std::vector<Complex>(s.begin(), s.end()));
}

MultiCoilKSpace::MultiCoilKSpace(int coils_, int height_, int width_, SamplingMask mask_)
    : coils(coils_), height(height_), width(width_),
      data(static_cast<std::size_t>(coils_) * height_ * width_), mask(std::move(mask_)) {}

std::span<Complex> MultiCoilKSpace::coil(int c) {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  return std::span<Complex>(data).subspan(c * n, n);
}

std::span<const Complex> MultiCoilKSpace::coil(int c) const {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  return std::span<const Complex>(data).subspan(c * n, n);
}

bool MultiCoilKSpace::zero_outside_mask() const {
  const auto& flags = mask.column_flags();
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!flags[i % width] && data[i] != Complex{0.0, 0.0}) return false;
  return true;
}

// ---------------------------------------------------------------------------
// EncodingOperator

EncodingOperator::EncodingOperator(std::shared_ptr<const CoilSensitivities> sens,
                                   SamplingMask mask, Execution exec)
    : sens_(std::move(sens)), mask_(std::move(mask)), exec_(exec) {
  if (!sens_ || sens_->coils < 1) throw InvalidArgument("EncodingOperator: no coil sensitivities");
  if (sens_->maps.size() != static_cast<std::size_t>(sens_->coils) * sens_->height * sens_->width)
    throw DimensionMismatch("EncodingOperator: coil map storage does not match C x H x W");
  if (mask_.width() != sens_->width)
    throw DimensionMismatch("EncodingOperator: mask width " + std::to_string(mask_.width()) +
                            " != image width " + std::to_string(sens_->width));
}

void EncodingOperator::check_image(const ComplexImage& x, const char* context) const {
  if (x.height() != height() || x.width() != width())
    throw DimensionMismatch(std::string(context) + ": image " + std::to_string(x.height()) + "x" +
                            std::to_string(x.width()) + " does not match operator " +
                            std::to_string(height()) + "x" + std::to_string(width()));
}

namespace {

void transform_coils(std::vector<Complex>& stack, int coils, int h, int w, fft::Direction dir,
                     Execution exec) {
  const std::size_t n = static_cast<std::size_t>(h) * w;
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < coils; ++c)
      fft::centered_fft2(std::span<Complex>(stack).subspan(c * n, n), h, w, dir);
  } else {
    for (int c = 0; c < coils; ++c)
      fft::centered_fft2(std::span<Complex>(stack).subspan(c * n, n), h, w, dir);
  }
}

}  // namespace

MultiCoilKSpace EncodingOperator::forward(const ComplexImage& x) const {
  check_image(x, "forward");
  MultiCoilKSpace y(coils(), height(), width(), mask_);
  if (exec_ == Execution::kParallel) {
    kernels::parallel::coil_expand(sens_->maps, x.span(), y.data);
  } else {
    kernels::serial::coil_expand(sens_->maps, x.span(), y.data);
  }
  transform_coils(y.data, coils(), height(), width(), fft::Direction::kForward, exec_);
  if (exec_ == Execution::kParallel) {
    kernels::parallel::mask_columns(y.data, height(), width(), mask_.column_flags());
  } else {
    kernels::serial::mask_columns(y.data, height(), width(), mask_.column_flags());
  }
  return y;
}

ComplexImage EncodingOperator::adjoint(const MultiCoilKSpace& y) const {
  if (y.coils != coils() || y.height != height() || y.width != width())
    throw DimensionMismatch("adjoint: k-space " + std::to_string(y.coils) + "x" +
                            std::to_string(y.height) + "x" + std::to_string(y.width) +
                            " does not match operator");
  std::vector<Complex> stack = y.data;
  ComplexImage x(height(), width());
  if (exec_ == Execution::kParallel) {
    kernels::parallel::mask_columns(stack, height(), width(), mask_.column_flags());
    transform_coils(stack, coils(), height(), width(), fft::Direction::kInverse, exec_);
    kernels::parallel::coil_combine(sens_->maps, stack, x.span());
  } else {
    kernels::serial::mask_columns(stack, height(), width(), mask_.column_flags());
    transform_coils(stack, coils(), height(), width(), fft::Direction::kInverse, exec_);
    kernels::serial::coil_combine(sens_->maps, stack, x.span());
  }
  return x;
}

ComplexImage EncodingOperator::normal(const ComplexImage& x) const {
  return adjoint(forward(x));
}

EncodingOperator EncodingOperator::restricted(const SamplingMask& mask) const {
  return EncodingOperator(sens_, mask, exec_);
}

EncodingOperator EncodingOperator::with_execution(Execution exec) const {
  return EncodingOperator(sens_, mask_, exec);
}

MultiCoilKSpace apply_forward(const EncodingOperator& op, const ComplexImage& x) {
  return op.forward(x);
}

ComplexImage apply_adjoint(const EncodingOperator& op, const MultiCoilKSpace& y) {
  return op.adjoint(y);
}

// ---------------------------------------------------------------------------
// simulator

namespace {

struct Ellipse {
  double intensity, a, b, x0, y0, phi_deg;
};

// Modified Shepp-Logan (Toft) parameters.
constexpr std::array<Ellipse, 10> kSheppLogan{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
}};

}  // namespace

ComplexImage make_phantom(int height, int width, std::uint64_t seed) {
  if (height < 16 || width < 16) throw InvalidArgument("make_phantom: H and W must be >= 16");
  Rng rng(derive_seed(seed, 0x5048414e));  // "PHAN"
  std::array<double, 10> intensity{};
  for (std::size_t e = 0; e < kSheppLogan.size(); ++e)
    intensity[e] = kSheppLogan[e].intensity * (e == 0 ? 1.0 : 1.0 + 0.1 * (rng.uniform() - 0.5));
  // smooth multiplicative bias and polynomial phase
  const double bias_x = 0.1 * (rng.uniform() - 0.5);
  const double bias_y = 0.1 * (rng.uniform() - 0.5);
  std::array<double, 6> phase{};
  for (auto& p : phase) p = 0.5 * std::numbers::pi * (rng.uniform() - 0.5);

  ComplexImage img(height, width);
  std::vector<double> mag(img.size(), 0.0);
  double peak = 0.0;
  for (int r = 0; r < height; ++r) {
    const double y = -(r - height / 2.0 + 0.5) / (height / 2.0);
    for (int c = 0; c < width; ++c) {
      const double x = (c - width / 2.0 + 0.5) / (width / 2.0);
      double v = 0.0;
      for (std::size_t e = 0; e < kSheppLogan.size(); ++e) {
        const auto& el = kSheppLogan[e];
        const double phi = el.phi_deg * std::numbers::pi / 180.0;
        const double dx = x - el.x0;
        const double dy = y - el.y0;
        const double u = (dx * std::cos(phi) + dy * std::sin(phi)) / el.a;
        const double w = (-dx * std::sin(phi) + dy * std::cos(phi)) / el.b;
        if (u * u + w * w <= 1.0) v += intensity[e];
      }
      v = std::abs(v) * (1.0 + bias_x * x + bias_y * y);
      mag[static_cast<std::size_t>(r) * width + c] = v;
      peak = std::max(peak, v);
    }
  }
  for (int r = 0; r < height; ++r) {
    const double y = -(r - height / 2.0 + 0.5) / (height / 2.0);
    for (int c = 0; c < width; ++c) {
      const double x = (c - width / 2.0 + 0.5) / (width / 2.0);
      const double theta = phase[0] + phase[1] * x + phase[2] * y + phase[3] * x * x +
                           phase[4] * x * y + phase[5] * y * y;
      const double m = mag[static_cast<std::size_t>(r) * width + c] / peak;
      img(r, c) = std::polar(m, theta);
    }
  }
  return img;
}

CoilSensitivities make_coil_maps(int height, int width, int coils, std::uint64_t seed) {
  if (coils < 1) throw InvalidArgument("make_coil_maps: coils must be >= 1");
  if (height < 1 || width < 1) throw InvalidArgument("make_coil_maps: empty image");
  Rng rng(derive_seed(seed, 0x434f494c));  // "COIL"
  const double offset = 2.0 * std::numbers::pi * rng.uniform();
  constexpr double kRadius = 1.3;
  constexpr double kWidth = 0.9;

  CoilSensitivities s{coils, height, width,
                      std::vector<Complex>(static_cast<std::size_t>(coils) * height * width)};
  const std::size_t n = static_cast<std::size_t>(height) * width;
  for (int c = 0; c < coils; ++c) {
    const double angle = offset + 2.0 * std::numbers::pi * c / coils;
    const double cx = kRadius * std::cos(angle);
    const double cy = kRadius * std::sin(angle);
    const double phase0 = 2.0 * std::numbers::pi * rng.uniform();
    const double ramp = 0.5 * std::numbers::pi * (rng.uniform() - 0.5);
    for (int r = 0; r < height; ++r) {
      const double y = -(r - height / 2.0 + 0.5) / (height / 2.0);
      for (int col = 0; col < width; ++col) {
        const double x = (col - width / 2.0 + 0.5) / (width / 2.0);
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double mag = std::exp(-d2 / (2.0 * kWidth * kWidth));
        const double theta = phase0 + ramp * (x * std::cos(angle) + y * std::sin(angle));
        s.maps[c * n + static_cast<std::size_t>(r) * width + col] = std::polar(mag, theta);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (int c = 0; c < coils; ++c) total += std::norm(s.maps[c * n + i]);
    const double inv = 1.0 / std::sqrt(total);
    for (int c = 0; c < coils; ++c) s.maps[c * n + i] *= inv;
  }
  return s;
}

MultiCoilKSpace simulate_kspace(const EncodingOperator& op, const ComplexImage& x,
                                double noise_std, std::uint64_t seed) {
  if (!(noise_std >= 0.0)) throw InvalidArgument("simulate_kspace: noise_std must be >= 0");
  MultiCoilKSpace y = op.forward(x);
  if (noise_std == 0.0) return y;
  Rng rng(derive_seed(seed, 0x4e4f4953));  // "NOIS"
  const double variance = noise_std * noise_std;
  const auto& flags = op.mask().column_flags();
  // draw for every sample so the noise realization does not depend on the mask
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    const Complex n = rng.complex_normal(variance);
    if (flags[i % y.width]) y.data[i] += n;
  }
  return y;
}

}  // namespace zads
