#include "zads/image.hpp"

#include <cmath>
#include <string>

#include "zads/errors.hpp"
#include "zads/kernels.hpp"

namespace zads {

ComplexImage::ComplexImage(int height, int width)
    : height_(height), width_(width),
      data_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
  if (height < 0 || width < 0) throw InvalidArgument("ComplexImage: negative dimension");
}

ComplexImage::ComplexImage(int height, int width, std::vector<Complex> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 0 || width < 0) throw InvalidArgument("ComplexImage: negative dimension");
  if (data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
    throw DimensionMismatch("ComplexImage: data length " + std::to_string(data_.size()) +
                            " != " + std::to_string(height) + "x" + std::to_string(width));
}

bool ComplexImage::all_finite() const noexcept {
  for (const auto& v : data_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

ComplexImage& ComplexImage::operator+=(const ComplexImage& other) {
  require_same_shape(*this, other, "operator+=");
  kernels::parallel::axpy(1.0, other.span(), span());
  return *this;
}

ComplexImage& ComplexImage::operator-=(const ComplexImage& other) {
  require_same_shape(*this, other, "operator-=");
  kernels::parallel::axpy(-1.0, other.span(), span());
  return *this;
}

ComplexImage& ComplexImage::operator*=(double s) {
  kernels::parallel::scale(s, span());
  return *this;
}

ComplexImage operator+(ComplexImage a, const ComplexImage& b) { return a += b; }
ComplexImage operator-(ComplexImage a, const ComplexImage& b) { return a -= b; }
ComplexImage operator*(double s, ComplexImage a) { return a *= s; }

Complex inner(const ComplexImage& a, const ComplexImage& b) {
  require_same_shape(a, b, "inner");
  return kernels::parallel::dot(a.span(), b.span());
}

double squared_norm(const ComplexImage& a) { return kernels::parallel::squared_norm(a.span()); }

double norm(const ComplexImage& a) { return std::sqrt(squared_norm(a)); }

void require_same_shape(const ComplexImage& a, const ComplexImage& b, const char* context) {
  if (!a.same_shape(b))
    throw DimensionMismatch(std::string(context) + ": " + std::to_string(a.height()) + "x" +
                            std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                            "x" + std::to_string(b.width()));
}

}  // namespace zads
