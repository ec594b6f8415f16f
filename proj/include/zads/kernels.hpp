#pragma once

// Data-parallel inner loops used by the operators and solvers.
//
// Every kernel exists twice: `serial::` is the plain reference loop kept for
// testing and benchmarking, `parallel::` is the OpenMP version used by the
// library. Elementwise kernels agree bitwise. Reductions in `parallel::` sum
// fixed-size blocks and combine the partials in block order, so their result
// does not depend on the thread count (it differs from the serial loop only by
// roundoff).

#include <cstdint>
#include <span>

#include "zads/image.hpp"

namespace zads::kernels {

inline constexpr std::size_t kReductionBlock = 2048;

namespace serial {

void axpy(Complex a, std::span<const Complex> x, std::span<Complex> y);
void axpby(double a, std::span<const Complex> x, double b, std::span<Complex> y);
void scale(double s, std::span<Complex> x);
Complex dot(std::span<const Complex> a, std::span<const Complex> b);
double squared_norm(std::span<const Complex> a);
double l1_norm(std::span<const Complex> a);

// out[c*n + i] = sens[c*n + i] * x[i]
void coil_expand(std::span<const Complex> sens, std::span<const Complex> x,
                 std::span<Complex> out);
// out[i] = sum_c conj(sens[c*n + i]) * coil_images[c*n + i]
void coil_combine(std::span<const Complex> sens, std::span<const Complex> coil_images,
                  std::span<Complex> out);
// Zeroes columns whose flag is 0 in a stack of (size / (height*width)) images.
void mask_columns(std::span<Complex> data, int height, int width,
                  std::span<const std::uint8_t> column_flags);

}  // namespace serial

namespace parallel {

void axpy(Complex a, std::span<const Complex> x, std::span<Complex> y);
void axpby(double a, std::span<const Complex> x, double b, std::span<Complex> y);
void scale(double s, std::span<Complex> x);
Complex dot(std::span<const Complex> a, std::span<const Complex> b);
double squared_norm(std::span<const Complex> a);
double l1_norm(std::span<const Complex> a);

void coil_expand(std::span<const Complex> sens, std::span<const Complex> x,
                 std::span<Complex> out);
void coil_combine(std::span<const Complex> sens, std::span<const Complex> coil_images,
                  std::span<Complex> out);
void mask_columns(std::span<Complex> data, int height, int width,
                  std::span<const std::uint8_t> column_flags);

}  // namespace parallel

}  // namespace zads::kernels
