#include "zads/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "zads/errors.hpp"

namespace zads {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

void check_pair(const RealImage& a, const RealImage& b, const char* what) {
  if (a.height != b.height || a.width != b.width || a.data.size() != b.data.size())
    throw DimensionMismatch(std::string(what) + ": image shapes differ");
  if (a.data.size() != static_cast<std::size_t>(a.height) * a.width)
    throw DimensionMismatch(std::string(what) + ": storage does not match shape");
}

std::vector<double> gaussian_taps() {
  std::vector<double> w(kWindow);
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += w[i];
  }
  for (auto& v : w) v /= total;
  return w;
}

// Separable 'valid' filtering: output is (h - 10) x (w - 10).
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& taps) {
  const int oh = h - kWindow + 1;
  const int ow = w - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * img[static_cast<std::size_t>(r) * w + c + k];
      rows[static_cast<std::size_t>(r) * ow + c] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int r = 0; r < oh; ++r)
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * rows[static_cast<std::size_t>(r + k) * ow + c];
      out[static_cast<std::size_t>(r) * ow + c] = acc;
    }
  return out;
}

}  // namespace

RealImage magnitude(const ComplexImage& x) {
  RealImage out{x.height(), x.width(), std::vector<double>(x.size())};
  for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = std::abs(x[i]);
  return out;
}

double psnr(const RealImage& ref, const RealImage& test) {
  check_pair(ref, test, "psnr");
  if (ref.data.empty()) throw InvalidArgument("psnr: empty image");
  const double peak = *std::max_element(ref.data.begin(), ref.data.end());
  if (!(peak > 0.0)) throw InvalidArgument("psnr: reference peak must be positive");
  double mse = 0.0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    const double d = ref.data[i] - test.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.data.size());
  if (mse == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const RealImage& ref, const RealImage& test) {
  check_pair(ref, test, "ssim");
  if (ref.height < kWindow || ref.width < kWindow)
    throw InvalidArgument("ssim: image smaller than the 11x11 window");
  const auto [lo, hi] = std::minmax_element(ref.data.begin(), ref.data.end());
  const double range = *hi - *lo;
  const double c1 = (kK1 * range) * (kK1 * range);
  const double c2 = (kK2 * range) * (kK2 * range);

  const int h = ref.height;
  const int w = ref.width;
  const auto taps = gaussian_taps();
  std::vector<double> xx(ref.data.size()), yy(ref.data.size()), xy(ref.data.size());
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    xx[i] = ref.data[i] * ref.data[i];
    yy[i] = test.data[i] * test.data[i];
    xy[i] = ref.data[i] * test.data[i];
  }
  const auto mu_x = filter_valid(ref.data, h, w, taps);
  const auto mu_y = filter_valid(test.data, h, w, taps);
  const auto e_xx = filter_valid(xx, h, w, taps);
  const auto e_yy = filter_valid(yy, h, w, taps);
  const auto e_xy = filter_valid(xy, h, w, taps);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x[i];
    const double my = mu_y[i];
    const double vx = e_xx[i] - mx * mx;
    const double vy = e_yy[i] - my * my;
    const double cxy = e_xy[i] - mx * my;
    total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mu_x.size());
}

MetricPair evaluate(const ComplexImage& ref, const ComplexImage& test) {
  require_same_shape(ref, test, "evaluate");
  RealImage r = magnitude(ref);
  RealImage t = magnitude(test);
  const double peak = *std::max_element(r.data.begin(), r.data.end());
  if (!(peak > 0.0)) throw InvalidArgument("evaluate: reference is all zero");
  for (auto& v : r.data) v /= peak;
  for (auto& v : t.data) v /= peak;
  return {psnr(r, t), ssim(r, t)};
}

}  // namespace zads
