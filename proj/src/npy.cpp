#include "zads/npy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <regex>

#include "zads/errors.hpp"

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

namespace zads::npy {

namespace {

constexpr char kMagic[] = "\x93NUMPY";

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    s += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) s += ",";
    if (i + 1 < shape.size()) s += " ";
  }
  return s + ")";
}

std::vector<std::size_t> parse_shape(const std::string& text) {
  std::vector<std::size_t> shape;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && !std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
    shape.push_back(std::stoull(text.substr(pos, end - pos)));
    pos = end;
  }
  return shape;
}

template <typename T>
T load(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void store(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

}  // namespace

std::size_t item_size(const std::string& descr) {
  if (descr == "<c8") return 8;
  if (descr == "<c16") return 16;
  if (descr == "<f4") return 4;
  if (descr == "<f8") return 8;
  if (descr == "|u1") return 1;
  throw InvalidArgument("npy: unsupported dtype '" + descr + "'");
}

std::size_t Array::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<std::uint8_t> encode(const Array& a) {
  if (a.bytes.size() != a.element_count() * item_size(a.descr))
    throw DimensionMismatch("npy: payload size does not match shape");
  std::string header = "{'descr': '" + a.descr + "', 'fortran_order': False, 'shape': " +
                       shape_string(a.shape) + ", }";
  const std::size_t preamble = 10;
  const std::size_t total = ((preamble + header.size() + 1 + 63) / 64) * 64;
  header.append(total - preamble - header.size() - 1, ' ');
  header += '\n';

  std::vector<std::uint8_t> out(kMagic, kMagic + 6);
  out.push_back(1);
  out.push_back(0);
  store<std::uint16_t>(out, static_cast<std::uint16_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), a.bytes.begin(), a.bytes.end());
  return out;
}

Array decode(const std::vector<std::uint8_t>& file) {
  if (file.size() < 10 || std::memcmp(file.data(), kMagic, 6) != 0)
    throw IoError("npy: missing magic string");
  const int major = file[6];
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1) {
    header_len = load<std::uint16_t>(file.data() + 8);
    offset = 10;
  } else if (major == 2 || major == 3) {
    if (file.size() < 12) throw IoError("npy: truncated header");
    header_len = load<std::uint32_t>(file.data() + 8);
    offset = 12;
  } else {
    throw IoError("npy: unsupported format version " + std::to_string(major));
  }
  if (file.size() < offset + header_len) throw IoError("npy: truncated header");
  const std::string header(file.begin() + offset, file.begin() + offset + header_len);

  static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
  static const std::regex fortran_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
  std::smatch m;
  Array a;
  if (!std::regex_search(header, m, descr_re)) throw IoError("npy: header lacks descr");
  a.descr = m[1];
  if (!std::regex_search(header, m, fortran_re)) throw IoError("npy: header lacks fortran_order");
  if (m[1] == "True") throw IoError("npy: Fortran-ordered arrays are not supported");
  if (!std::regex_search(header, m, shape_re)) throw IoError("npy: header lacks shape");
  a.shape = parse_shape(m[1]);

  std::size_t isz = 0;
  try {
    isz = item_size(a.descr);
  } catch (const InvalidArgument& e) {
    throw IoError(e.what());
  }
  const std::size_t payload = a.element_count() * isz;
  if (file.size() - offset - header_len != payload)
    throw IoError("npy: payload has " + std::to_string(file.size() - offset - header_len) +
                  " bytes, expected " + std::to_string(payload));
  a.bytes.assign(file.begin() + offset + header_len, file.end());
  return a;
}

void write(const std::filesystem::path& path, const Array& a) {
  const auto bytes = encode(a);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Array read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Array from_complex(const std::vector<Complex>& values, std::vector<std::size_t> shape) {
  Array a{"<c8", std::move(shape), {}};
  if (a.element_count() != values.size()) throw DimensionMismatch("npy: shape does not match values");
  a.bytes.reserve(values.size() * 8);
  for (const auto& v : values) {
    store(a.bytes, static_cast<float>(v.real()));
    store(a.bytes, static_cast<float>(v.imag()));
  }
  return a;
}

std::vector<Complex> to_complex(const Array& a) {
  const std::size_t n = a.element_count();
  std::vector<Complex> out(n);
  const std::uint8_t* p = a.bytes.data();
  if (a.descr == "<c8") {
    for (std::size_t i = 0; i < n; ++i) out[i] = {load<float>(p + 8 * i), load<float>(p + 8 * i + 4)};
  } else if (a.descr == "<c16") {
    for (std::size_t i = 0; i < n; ++i) out[i] = {load<double>(p + 16 * i), load<double>(p + 16 * i + 8)};
  } else {
    const auto real = to_real(a);
    for (std::size_t i = 0; i < n; ++i) out[i] = real[i];
  }
  return out;
}

Array from_real(const std::vector<double>& values, std::vector<std::size_t> shape) {
  Array a{"<f4", std::move(shape), {}};
  if (a.element_count() != values.size()) throw DimensionMismatch("npy: shape does not match values");
  a.bytes.reserve(values.size() * 4);
  for (double v : values) store(a.bytes, static_cast<float>(v));
  return a;
}

std::vector<double> to_real(const Array& a) {
  const std::size_t n = a.element_count();
  std::vector<double> out(n);
  const std::uint8_t* p = a.bytes.data();
  if (a.descr == "<f4") {
    for (std::size_t i = 0; i < n; ++i) out[i] = load<float>(p + 4 * i);
  } else if (a.descr == "<f8") {
    for (std::size_t i = 0; i < n; ++i) out[i] = load<double>(p + 8 * i);
  } else if (a.descr == "|u1") {
    for (std::size_t i = 0; i < n; ++i) out[i] = p[i];
  } else {
    throw IoError("npy: expected a real array, got '" + a.descr + "'");
  }
  return out;
}

Array from_flags(const std::vector<std::uint8_t>& flags) {
  return Array{"|u1", {flags.size()}, flags};
}

void write_image(const std::filesystem::path& path, const ComplexImage& x) {
  write(path, from_complex(x.values(),
                           {static_cast<std::size_t>(x.height()), static_cast<std::size_t>(x.width())}));
}

ComplexImage read_image(const std::filesystem::path& path) {
  const Array a = read(path);
  if (a.shape.size() != 2) throw IoError(path.string() + ": expected a 2-D array");
  return ComplexImage(static_cast<int>(a.shape[0]), static_cast<int>(a.shape[1]), to_complex(a));
}

}  // namespace zads::npy

namespace zads::pgm {

void write_magnitude(const std::filesystem::path& path, const ComplexImage& x) {
  double peak = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) peak = std::max(peak, std::abs(x[i]));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << x.width() << " " << x.height() << "\n65535\n";
  std::vector<unsigned char> row(2 * x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = peak > 0.0 ? std::abs(x[i]) / peak : 0.0;
    const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
    row[2 * i] = static_cast<unsigned char>(q >> 8);
    row[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
  }
  out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace zads::pgm
