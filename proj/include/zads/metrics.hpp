#pragma once

#include <limits>
#include <vector>

#include "zads/image.hpp"

namespace zads {

/// Real-valued H x W image (magnitudes).
struct RealImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;
};

RealImage magnitude(const ComplexImage& x);

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// 10 log10(max(ref)^2 / MSE). Identical images give kInfinitePsnr.
double psnr(const RealImage& ref, const RealImage& test);

/// Mean SSIM over all fully contained 11x11 Gaussian windows (sigma 1.5,
/// K1 = 0.01, K2 = 0.03), dynamic range max(ref) - min(ref).
double ssim(const RealImage& ref, const RealImage& test);

struct MetricPair {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Metrics on magnitudes, both divided by max |ref|.
MetricPair evaluate(const ComplexImage& ref, const ComplexImage& test);

}  // namespace zads
