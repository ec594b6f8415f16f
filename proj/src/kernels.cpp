#include "zads/kernels.hpp"

#include <cmath>
#include <vector>

#include "zads/errors.hpp"

namespace zads::kernels {

namespace {

void check_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DimensionMismatch(std::string(what) + ": length mismatch");
}

void check_coils(std::size_t stacked, std::size_t single, const char* what) {
  if (single == 0 || stacked % single != 0)
    throw DimensionMismatch(std::string(what) + ": coil stack is not a multiple of the image size");
}

std::size_t block_count(std::size_t n) {
  return (n + kReductionBlock - 1) / kReductionBlock;
}

}  // namespace

// ---------------------------------------------------------------------------
// serial reference

namespace serial {

void axpy(Complex a, std::span<const Complex> x, std::span<Complex> y) {
  check_same(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void axpby(double a, std::span<const Complex> x, double b, std::span<Complex> y) {
  check_same(x.size(), y.size(), "axpby");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b * y[i];
}

void scale(double s, std::span<Complex> x) {
  for (auto& v : x) v *= s;
}

Complex dot(std::span<const Complex> a, std::span<const Complex> b) {
  check_same(a.size(), b.size(), "dot");
  Complex acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

double squared_norm(std::span<const Complex> a) {
  double acc = 0.0;
  for (const auto& v : a) acc += std::norm(v);
  return acc;
}

double l1_norm(std::span<const Complex> a) {
  double acc = 0.0;
  for (const auto& v : a) acc += std::abs(v);
  return acc;
}

void coil_expand(std::span<const Complex> sens, std::span<const Complex> x,
                 std::span<Complex> out) {
  check_same(sens.size(), out.size(), "coil_expand");
  check_coils(sens.size(), x.size(), "coil_expand");
  const std::size_t n = x.size();
  const std::size_t coils = sens.size() / n;
  for (std::size_t c = 0; c < coils; ++c)
    for (std::size_t i = 0; i < n; ++i) out[c * n + i] = sens[c * n + i] * x[i];
}

void coil_combine(std::span<const Complex> sens, std::span<const Complex> coil_images,
                  std::span<Complex> out) {
  check_same(sens.size(), coil_images.size(), "coil_combine");
  check_coils(sens.size(), out.size(), "coil_combine");
  const std::size_t n = out.size();
  const std::size_t coils = sens.size() / n;
  for (std::size_t i = 0; i < n; ++i) {
    Complex acc{0.0, 0.0};
    for (std::size_t c = 0; c < coils; ++c) acc += std::conj(sens[c * n + i]) * coil_images[c * n + i];
    out[i] = acc;
  }
}

void mask_columns(std::span<Complex> data, int height, int width,
                  std::span<const std::uint8_t> column_flags) {
  check_same(column_flags.size(), static_cast<std::size_t>(width), "mask_columns");
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  check_coils(data.size(), plane, "mask_columns");
  const std::size_t rows = data.size() / width;
  for (std::size_t r = 0; r < rows; ++r)
    for (int col = 0; col < width; ++col)
      if (!column_flags[col]) data[r * width + col] = Complex{0.0, 0.0};
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP

namespace parallel {

void axpy(Complex a, std::span<const Complex> x, std::span<Complex> y) {
  check_same(x.size(), y.size(), "axpy");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpby(double a, std::span<const Complex> x, double b, std::span<Complex> y) {
  check_same(x.size(), y.size(), "axpby");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void scale(double s, std::span<Complex> x) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) x[i] *= s;
}

Complex dot(std::span<const Complex> a, std::span<const Complex> b) {
  check_same(a.size(), b.size(), "dot");
  const std::size_t n = a.size();
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>(block_count(n));
  std::vector<Complex> partial(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t lo = blk * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    Complex acc{0.0, 0.0};
    for (std::size_t i = lo; i < hi; ++i) acc += std::conj(a[i]) * b[i];
    partial[blk] = acc;
  }
  Complex total{0.0, 0.0};
  for (const auto& p : partial) total += p;
  return total;
}

double squared_norm(std::span<const Complex> a) {
  const std::size_t n = a.size();
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>(block_count(n));
  std::vector<double> partial(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t lo = blk * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += std::norm(a[i]);
    partial[blk] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double l1_norm(std::span<const Complex> a) {
  const std::size_t n = a.size();
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>(block_count(n));
  std::vector<double> partial(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t lo = blk * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += std::abs(a[i]);
    partial[blk] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void coil_expand(std::span<const Complex> sens, std::span<const Complex> x,
                 std::span<Complex> out) {
  check_same(sens.size(), out.size(), "coil_expand");
  check_coils(sens.size(), x.size(), "coil_expand");
  const std::size_t n = x.size();
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(sens.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < total; ++k) out[k] = sens[k] * x[k % n];
}

void coil_combine(std::span<const Complex> sens, std::span<const Complex> coil_images,
                  std::span<Complex> out) {
  check_same(sens.size(), coil_images.size(), "coil_combine");
  check_coils(sens.size(), out.size(), "coil_combine");
  const std::size_t n = out.size();
  const std::size_t coils = sens.size() / n;
  const std::ptrdiff_t pixels = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < pixels; ++i) {
    Complex acc{0.0, 0.0};
    for (std::size_t c = 0; c < coils; ++c) acc += std::conj(sens[c * n + i]) * coil_images[c * n + i];
    out[i] = acc;
  }
}

void mask_columns(std::span<Complex> data, int height, int width,
                  std::span<const std::uint8_t> column_flags) {
  check_same(column_flags.size(), static_cast<std::size_t>(width), "mask_columns");
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  check_coils(data.size(), plane, "mask_columns");
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(data.size() / width);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r)
    for (int col = 0; col < width; ++col)
      if (!column_flags[col]) data[r * width + col] = Complex{0.0, 0.0};
}

}  // namespace parallel

}  // namespace zads::kernels
