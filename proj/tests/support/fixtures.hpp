#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "zads/app.hpp"
#include "zads/mri_model.hpp"

namespace fixture {

/// Encoding operator over random unit-normalized coils.
zads::EncodingOperator random_operator(int height, int width, int coils, const zads::SamplingMask& mask,
                                       std::uint64_t seed);

/// Single coil, S = 1 everywhere.
zads::EncodingOperator unit_coil_operator(int height, int width, const zads::SamplingMask& mask);

/// The 64x64 matched-Gaussian fixture: R = 4, 8 ACS lines, 4 coils, S = 8
/// banded steps (5, 2, 1), Adam on log(zeta).
zads::app::Config gaussian_fixture(std::uint64_t seed);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

/// Runs the zads executable with `args`, returns its exit status.
int run_cli(const std::string& args);

/// Hex FNV-1a 64 hash of the raw bytes of `data`.
std::string hash_bytes(const void* data, std::size_t size);

}  // namespace fixture
