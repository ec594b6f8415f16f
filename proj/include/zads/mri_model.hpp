#pragma once

// Multi-coil Cartesian encoding: column undersampling masks, coil
// sensitivities, the encoding operator E = mask . F . S and its adjoint, plus a
// synthetic data simulator (phantom, coil maps, noisy k-space).

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "zads/image.hpp"

namespace zads {

/// Set of sampled phase-encode columns. `acceleration` and `acs` record the
/// spec the mask was generated from (0 when the mask is derived, e.g. a split).
class SamplingMask {
 public:
  SamplingMask() = default;
  SamplingMask(int width, std::vector<int> lines, int acceleration = 0, int acs = 0);

  static SamplingMask full(int width);

  int width() const noexcept { return width_; }
  int acceleration() const noexcept { return acceleration_; }
  int acs() const noexcept { return acs_; }
  const std::vector<int>& lines() const noexcept { return lines_; }
  std::size_t count() const noexcept { return lines_.size(); }
  const std::vector<std::uint8_t>& column_flags() const noexcept { return flags_; }

  bool contains(int column) const;
  bool is_subset_of(const SamplingMask& other) const;
  /// Central calibration columns W/2 - acs/2 ... W/2 - acs/2 + acs - 1.
  std::vector<int> acs_lines() const;

  friend bool operator==(const SamplingMask& a, const SamplingMask& b) {
    return a.width_ == b.width_ && a.lines_ == b.lines_;
  }

 private:
  int width_ = 0;
  int acceleration_ = 0;
  int acs_ = 0;
  std::vector<int> lines_;
  std::vector<std::uint8_t> flags_;
};

/// Columns {0, R, 2R, ...} united with the central `acs` block.
SamplingMask make_equispaced_mask(int width, int acceleration, int acs);

struct CoilSensitivities {
  int coils = 0;
  int height = 0;
  int width = 0;
  std::vector<Complex> maps;  // coils x height x width

  std::span<const Complex> coil(int c) const;
  ComplexImage coil_image(int c) const;
};

struct MultiCoilKSpace {
  int coils = 0;
  int height = 0;
  int width = 0;
  std::vector<Complex> data;  // coils x height x width
  SamplingMask mask;

  MultiCoilKSpace() = default;
  MultiCoilKSpace(int coils, int height, int width, SamplingMask mask);

  std::span<Complex> coil(int c);
  std::span<const Complex> coil(int c) const;
  bool zero_outside_mask() const;
};

enum class Execution { kParallel, kSerial };

class EncodingOperator {
 public:
  EncodingOperator(std::shared_ptr<const CoilSensitivities> sens, SamplingMask mask,
                   Execution exec = Execution::kParallel);

  int coils() const noexcept { return sens_->coils; }
  int height() const noexcept { return sens_->height; }
  int width() const noexcept { return sens_->width; }
  const SamplingMask& mask() const noexcept { return mask_; }
  const CoilSensitivities& sensitivities() const noexcept { return *sens_; }
  std::shared_ptr<const CoilSensitivities> shared_sensitivities() const noexcept { return sens_; }
  Execution execution() const noexcept { return exec_; }

  /// Per coil: mask . F(S_c x), unitary centered FFT.
  MultiCoilKSpace forward(const ComplexImage& x) const;
  /// sum_c conj(S_c) F^-1(mask . y_c).
  ComplexImage adjoint(const MultiCoilKSpace& y) const;
  /// E^H E x without materializing the k-space object.
  ComplexImage normal(const ComplexImage& x) const;

  /// Same coils, different column set (E_Theta, E_Lambda).
  EncodingOperator restricted(const SamplingMask& mask) const;
  EncodingOperator with_execution(Execution exec) const;

 private:
  void check_image(const ComplexImage& x, const char* context) const;

  std::shared_ptr<const CoilSensitivities> sens_;
  SamplingMask mask_;
  Execution exec_;
};

MultiCoilKSpace apply_forward(const EncodingOperator& op, const ComplexImage& x);
ComplexImage apply_adjoint(const EncodingOperator& op, const MultiCoilKSpace& y);

/// Modified Shepp-Logan magnitude with a smooth intensity bias and a smooth
/// low-order polynomial phase, both drawn from `seed`. Peak magnitude is 1.
ComplexImage make_phantom(int height, int width, std::uint64_t seed);

/// Gaussian-bump coil profiles centred at equiangular positions outside the
/// field of view with seed-dependent phase, normalized so sum_c |S_c|^2 = 1.
CoilSensitivities make_coil_maps(int height, int width, int coils, std::uint64_t seed);

/// E x + mask . n with n ~ CN(0, noise_std^2) per k-space sample.
MultiCoilKSpace simulate_kspace(const EncodingOperator& op, const ComplexImage& x,
                                double noise_std, std::uint64_t seed);

}  // namespace zads
