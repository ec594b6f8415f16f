#pragma once

// NPY (format 1.0) arrays and 16-bit PGM images.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "zads/image.hpp"

namespace zads::npy {

struct Array {
  std::string descr;  // "<c8", "<c16", "<f4", "<f8", "|u1"
  std::vector<std::size_t> shape;
  std::vector<std::uint8_t> bytes;  // raw little-endian payload, C order

  std::size_t element_count() const;
};

std::size_t item_size(const std::string& descr);

void write(const std::filesystem::path& path, const Array& a);
Array read(const std::filesystem::path& path);

/// Serialized file contents (header + payload).
std::vector<std::uint8_t> encode(const Array& a);
Array decode(const std::vector<std::uint8_t>& file);

/// Complex values stored as complex64; read also accepts complex128.
Array from_complex(const std::vector<Complex>& values, std::vector<std::size_t> shape);
std::vector<Complex> to_complex(const Array& a);

Array from_real(const std::vector<double>& values, std::vector<std::size_t> shape);
std::vector<double> to_real(const Array& a);

Array from_flags(const std::vector<std::uint8_t>& flags);

void write_image(const std::filesystem::path& path, const ComplexImage& x);
ComplexImage read_image(const std::filesystem::path& path);

}  // namespace zads::npy

namespace zads::pgm {

/// Binary 16-bit PGM (P5, maxval 65535) of |x| scaled so max |x| maps to 65535.
void write_magnitude(const std::filesystem::path& path, const ComplexImage& x);

}  // namespace zads::pgm
