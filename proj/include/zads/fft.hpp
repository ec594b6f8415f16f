#pragma once

#include <span>

#include "zads/image.hpp"

namespace zads::fft {

enum class Direction { kForward, kInverse };

/// Unitary, centered 2-D DFT in place on one row-major height x width plane:
/// fftshift(fft2(ifftshift(x))) / sqrt(height*width), and its inverse.
/// Thread-safe; plans are created once per (shape, direction) with FFTW.
void centered_fft2(std::span<Complex> plane, int height, int width, Direction dir);

ComplexImage forward(const ComplexImage& x);
ComplexImage inverse(const ComplexImage& k);

}  // namespace zads::fft
