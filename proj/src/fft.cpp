#include "zads/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "zads/errors.hpp"

namespace zads::fft {

namespace {

// FFTW planning is not thread-safe; execution with new-array execute is.
// FFTW_UNALIGNED keeps the chosen codelets independent of buffer addresses so
// results are reproducible run to run.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int height, int width, Direction dir) {
    const auto key = std::make_tuple(height, width, dir == Direction::kForward);
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const std::size_t n = static_cast<std::size_t>(height) * width;
    auto* in = fftw_alloc_complex(n);
    auto* out = fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft_2d(height, width, in, out,
                                      dir == Direction::kForward ? FFTW_FORWARD : FFTW_BACKWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    if (!plan) throw Error("fftw: failed to create plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, bool>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void centered_fft2(std::span<Complex> plane, int height, int width, Direction dir) {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if (plane.size() != n) throw DimensionMismatch("centered_fft2: plane size mismatch");
  if (n == 0) return;
  fftw_plan plan = cache().get(height, width, dir);

  thread_local std::vector<Complex> shifted;
  thread_local std::vector<Complex> spectrum;
  shifted.resize(n);
  spectrum.resize(n);

  // ifftshift: element at (r, c) moves to ((r - h/2) mod h, (c - w/2) mod w)
  const int ch = height / 2;
  const int cw = width / 2;
  for (int r = 0; r < height; ++r) {
    const int rs = (r - ch + height) % height;
    for (int c = 0; c < width; ++c) {
      const int cs = (c - cw + width) % width;
      shifted[static_cast<std::size_t>(rs) * width + cs] = plane[static_cast<std::size_t>(r) * width + c];
    }
  }

  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(shifted.data()),
                   reinterpret_cast<fftw_complex*>(spectrum.data()));

  // fftshift back with unitary scaling
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int r = 0; r < height; ++r) {
    const int rs = (r - ch + height) % height;
    for (int c = 0; c < width; ++c) {
      const int cs = (c - cw + width) % width;
      plane[static_cast<std::size_t>(r) * width + c] = spectrum[static_cast<std::size_t>(rs) * width + cs] * s;
    }
  }
}

ComplexImage forward(const ComplexImage& x) {
  ComplexImage k = x;
  centered_fft2(k.span(), k.height(), k.width(), Direction::kForward);
  return k;
}

ComplexImage inverse(const ComplexImage& k) {
  ComplexImage x = k;
  centered_fft2(x.span(), x.height(), x.width(), Direction::kInverse);
  return x;
}

}  // namespace zads::fft
