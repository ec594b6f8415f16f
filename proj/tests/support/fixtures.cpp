#include "fixtures.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <fmt/format.h>

#include "oracles.hpp"

namespace fixture {

zads::EncodingOperator random_operator(int height, int width, int coils, const zads::SamplingMask& mask,
                                       std::uint64_t seed) {
  auto sens = std::make_shared<const zads::CoilSensitivities>(oracle::random_coils(coils, height, width, seed));
  return zads::EncodingOperator(sens, mask);
}

zads::EncodingOperator unit_coil_operator(int height, int width, const zads::SamplingMask& mask) {
  auto sens = std::make_shared<zads::CoilSensitivities>();
  sens->coils = 1;
  sens->height = height;
  sens->width = width;
  sens->maps.assign(static_cast<std::size_t>(height) * width, zads::Complex(1.0, 0.0));
  return zads::EncodingOperator(sens, mask);
}

zads::app::Config gaussian_fixture(std::uint64_t seed) {
  zads::app::Config c;
  c.seed = seed;
  c.schedule.bands = {{0.1, 5}, {0.5, 2}, {1.0, 1}};
  c.tuner.optimizer = "adam";
  c.tuner.learning_rate = 0.3;
  return c;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("zads_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ZADS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string hash_bytes(const void* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace fixture
