#pragma once

#include <cstdint>
#include <random>

#include "zads/image.hpp"

namespace zads {

/// Mixes a base seed with stream identifiers (splitmix64 finalizer). Used to
/// address independent, reproducible noise streams by (seed, epoch, step).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// mt19937_64 with Box-Muller normals and rejection-sampled integers, so draws
/// do not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // (0, 1]
  std::uint64_t uniform_int(std::uint64_t bound);  // [0, bound)
  double normal();
  /// Circular complex Gaussian with E|z|^2 = variance.
  Complex complex_normal(double variance = 1.0);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// H x W image of i.i.d. CN(0, variance) entries.
ComplexImage complex_gaussian_image(int height, int width, std::uint64_t seed,
                                    double variance = 1.0);

}  // namespace zads
