#include <gtest/gtest.h>
#include <omp.h>

#include <vector>

#include "oracles.hpp"
#include "zads/kernels.hpp"

namespace k = zads::kernels;
using zads::Complex;

namespace {

std::vector<Complex> random_values(std::size_t n, std::uint64_t seed) {
  const auto img = oracle::random_image(1, static_cast<int>(n), seed);
  return img.values();
}

class KernelSizes : public ::testing::TestWithParam<std::size_t> {};

TEST_P(KernelSizes, ElementwiseKernelsAgreeBitwise) {
  const std::size_t n = GetParam();
  const auto x = random_values(n, 1);
  auto y1 = random_values(n, 2);
  auto y2 = y1;
  k::serial::axpy({0.3, -1.2}, x, y1);
  k::parallel::axpy({0.3, -1.2}, x, y2);
  EXPECT_EQ(y1, y2);
  k::serial::axpby(0.7, x, -2.5, y1);
  k::parallel::axpby(0.7, x, -2.5, y2);
  EXPECT_EQ(y1, y2);
  k::serial::scale(1.5, y1);
  k::parallel::scale(1.5, y2);
  EXPECT_EQ(y1, y2);
}

TEST_P(KernelSizes, ReductionsMatchSerialLoop) {
  const std::size_t n = GetParam();
  const auto a = random_values(n, 3);
  const auto b = random_values(n, 4);
  const double tol = 1e-12 * static_cast<double>(n + 1);
  EXPECT_NEAR(std::abs(k::serial::dot(a, b) - k::parallel::dot(a, b)), 0.0, tol);
  EXPECT_NEAR(k::serial::squared_norm(a), k::parallel::squared_norm(a), tol);
  EXPECT_NEAR(k::serial::l1_norm(a), k::parallel::l1_norm(a), tol);
}

TEST_P(KernelSizes, ReductionsIndependentOfThreadCount) {
  const std::size_t n = GetParam();
  const auto a = random_values(n, 5);
  const auto b = random_values(n, 6);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const Complex d1 = k::parallel::dot(a, b);
  const double s1 = k::parallel::squared_norm(a);
  omp_set_num_threads(3);
  const Complex d3 = k::parallel::dot(a, b);
  const double s3 = k::parallel::squared_norm(a);
  omp_set_num_threads(saved);
  EXPECT_EQ(d1, d3);
  EXPECT_EQ(s1, s3);
}

INSTANTIATE_TEST_SUITE_P(Sizes, KernelSizes,
                         ::testing::Values(0, 1, 7, k::kReductionBlock - 1, k::kReductionBlock,
                                           k::kReductionBlock + 1, 10000));

TEST(CoilKernels, ExpandCombineMaskAgree) {
  const int coils = 3, h = 17, w = 23;
  const std::size_t n = static_cast<std::size_t>(h) * w;
  const auto sens = random_values(coils * n, 7);
  const auto x = random_values(n, 8);
  std::vector<Complex> e1(coils * n), e2(coils * n);
  k::serial::coil_expand(sens, x, e1);
  k::parallel::coil_expand(sens, x, e2);
  EXPECT_EQ(e1, e2);
  for (int c = 0; c < coils; ++c)
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(e1[c * n + i], sens[c * n + i] * x[i]);

  std::vector<Complex> c1(n), c2(n);
  k::serial::coil_combine(sens, e1, c1);
  k::parallel::coil_combine(sens, e1, c2);
  EXPECT_EQ(c1, c2);

  std::vector<std::uint8_t> flags(w, 0);
  flags[0] = flags[5] = flags[22] = 1;
  auto m1 = e1, m2 = e1;
  k::serial::mask_columns(m1, h, w, flags);
  k::parallel::mask_columns(m2, h, w, flags);
  EXPECT_EQ(m1, m2);
  for (std::size_t i = 0; i < m1.size(); ++i) {
    if (flags[i % w]) EXPECT_EQ(m1[i], e1[i]);
    else EXPECT_EQ(m1[i], Complex(0.0, 0.0));
  }
}

}  // namespace
