#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace zads {

using Complex = std::complex<double>;

/// Row-major H x W complex field. Holds diffusion states, denoised
/// estimates, predicted noise and coil-combined images alike.
class ComplexImage {
 public:
  ComplexImage() = default;
  ComplexImage(int height, int width);
  ComplexImage(int height, int width, std::vector<Complex> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  Complex& operator()(int row, int col) { return data_[index(row, col)]; }
  const Complex& operator()(int row, int col) const { return data_[index(row, col)]; }
  Complex& operator[](std::size_t i) { return data_[i]; }
  const Complex& operator[](std::size_t i) const { return data_[i]; }

  std::span<Complex> span() noexcept { return data_; }
  std::span<const Complex> span() const noexcept { return data_; }
  std::vector<Complex>& values() noexcept { return data_; }
  const std::vector<Complex>& values() const noexcept { return data_; }

  bool same_shape(const ComplexImage& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool all_finite() const noexcept;

  ComplexImage& operator+=(const ComplexImage& other);
  ComplexImage& operator-=(const ComplexImage& other);
  ComplexImage& operator*=(double s);

  friend bool operator==(const ComplexImage&, const ComplexImage&) = default;

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<Complex> data_;
};

ComplexImage operator+(ComplexImage a, const ComplexImage& b);
ComplexImage operator-(ComplexImage a, const ComplexImage& b);
ComplexImage operator*(double s, ComplexImage a);

/// Complex inner product sum(conj(a) * b).
Complex inner(const ComplexImage& a, const ComplexImage& b);
double norm(const ComplexImage& a);
double squared_norm(const ComplexImage& a);

void require_same_shape(const ComplexImage& a, const ComplexImage& b, const char* context);

}  // namespace zads
