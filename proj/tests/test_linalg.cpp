#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "zads/errors.hpp"
#include "zads/fft.hpp"
#include "zads/linalg.hpp"

namespace {

using namespace zads;

struct DcFixture {
  EncodingOperator op;
  MultiCoilKSpace y;
  ComplexImage x_hat;
  Eigen::MatrixXcd e;
};

DcFixture make_fixture(int h, int w, int coils, int R, std::uint64_t seed) {
  const SamplingMask mask = make_equispaced_mask(w, R, 2);
  EncodingOperator op = fixture::random_operator(h, w, coils, mask, seed);
  MultiCoilKSpace y = oracle::random_kspace(coils, h, w, mask, seed + 1);
  ComplexImage x_hat = oracle::random_image(h, w, seed + 2);
  Eigen::MatrixXcd e = oracle::encoding_matrix(op.sensitivities(), mask);
  return {std::move(op), std::move(y), std::move(x_hat), std::move(e)};
}

// zeta ||x - x_hat||^2 + ||y - E x||^2
double dc_objective(const DcFixture& f, double zeta, const ComplexImage& x) {
  const auto ex = f.op.forward(x);
  double fit = 0;
  for (std::size_t i = 0; i < ex.data.size(); ++i) fit += std::norm(f.y.data[i] - ex.data[i]);
  return zeta * squared_norm(x - f.x_hat) + fit;
}

TEST(Cg, IdentitySystemConvergesInOneIteration) {
  const ComplexImage b = oracle::random_image(6, 6, 1);
  const auto res = cg_solve([](const ComplexImage& x) { return x; }, b, ComplexImage(6, 6), CgConfig{10, 0.0});
  EXPECT_EQ(res.iterations, 1);
  EXPECT_LT(oracle::max_abs_diff(res.x, b), 1e-15);
  EXPECT_LT(res.relative_residual, 1e-15);
}

TEST(Cg, MatchesDenseSolve8x8SingleCoilR2) {
  const auto f = make_fixture(8, 8, 1, 2, 10);
  const ComplexImage ay = f.op.adjoint(f.y);
  for (double zeta : {0.5, 0.03, 0.3, 3.0, 30.0}) {
    const auto cg = data_consistency_solve(f.op, zeta, ay, f.x_hat, CgConfig{128, 0.0});
    const ComplexImage dense = oracle::shifted_solve(f.e, zeta, oracle::to_vector(f.y), f.x_hat);
    EXPECT_LE(oracle::relative_error(cg.x, dense), 1e-8) << zeta;
    EXPECT_LE(oracle::relative_error(dense_normal_solve(f.op, zeta, f.y, f.x_hat), dense), 1e-12);
    EXPECT_LE(oracle::relative_error(cg.x, dense_normal_solve(f.op, zeta, f.y, f.x_hat)), 1e-8);
  }
}

TEST(Cg, ObjectiveNonIncreasingEveryIteration) {
  for (std::uint64_t seed : {20, 30, 40}) {
    const auto f = make_fixture(8, 8, seed == 40 ? 3 : 1, 2, seed);
    const ComplexImage ay = f.op.adjoint(f.y);
    for (double zeta : {0.03, 0.3, 3.0, 30.0}) {
      double prev = dc_objective(f, zeta, f.x_hat);
      const ComplexImage rhs = ay + zeta * f.x_hat;
      cg_solve(shifted_normal(f.op, zeta), rhs, f.x_hat, CgConfig{40, 0.0},
               [&](int, const ComplexImage& x, const ComplexImage&) {
                 const double cur = dc_objective(f, zeta, x);
                 EXPECT_LE(cur, prev + 1e-12 * std::abs(prev));
                 prev = cur;
               });
    }
  }
}

TEST(Cg, ResidualNormNonIncreasingOnShiftedNormalSystems) {
  for (std::uint64_t seed : {50, 60}) {
    const auto f = make_fixture(16, 16, 4, 4, seed);
    const ComplexImage ay = f.op.adjoint(f.y);
    for (double zeta : {0.03, 0.3, 3.0, 30.0}) {
      const ComplexImage rhs = ay + zeta * f.x_hat;
      double prev = norm(rhs - shifted_normal(f.op, zeta)(f.x_hat));
      cg_solve(shifted_normal(f.op, zeta), rhs, f.x_hat, CgConfig{15, 0.0},
               [&](int, const ComplexImage&, const ComplexImage& r) {
                 EXPECT_LE(norm(r), prev * (1 + 1e-12));
                 prev = norm(r);
               });
    }
  }
}

TEST(Cg, LargeShiftReturnsPriorTarget) {
  const auto f = make_fixture(8, 8, 2, 2, 70);
  const auto res = data_consistency_solve(f.op, 1e8, f.op.adjoint(f.y), f.x_hat, CgConfig{15, 0.0});
  EXPECT_LE(oracle::relative_error(res.x, f.x_hat), 1e-6);
  EXPECT_LE(oracle::relative_error(dense_normal_solve(f.op, 1e8, f.y, f.x_hat), f.x_hat), 1e-6);
}

TEST(Cg, FullMaskUnitCoilIsDiagonal) {
  const auto op = fixture::unit_coil_operator(8, 8, SamplingMask::full(8));
  const auto y = oracle::random_kspace(1, 8, 8, op.mask(), 80);
  const ComplexImage x_hat = oracle::random_image(8, 8, 81);
  const double zeta = 0.7;
  ComplexImage expected = op.adjoint(y) + zeta * x_hat;
  expected *= 1.0 / (1.0 + zeta);
  EXPECT_LT(oracle::max_abs_diff(dense_normal_solve(op, zeta, y, x_hat), expected), 1e-12);
  EXPECT_LT(oracle::max_abs_diff(data_consistency_solve(op, zeta, op.adjoint(y), x_hat, CgConfig{2, 0}).x, expected), 1e-12);
}

TEST(Cg, PhaseRotationEquivariance) {
  const auto f = make_fixture(8, 8, 2, 2, 90);
  const ComplexImage rhs = f.op.adjoint(f.y) + 0.4 * f.x_hat;
  const auto a = cg_solve(shifted_normal(f.op, 0.4), rhs, f.x_hat, CgConfig{15, 0});
  const Complex phase = std::polar(1.0, 0.9);
  ComplexImage rb = rhs, rx = f.x_hat;
  for (auto& v : rb.values()) v *= phase;
  for (auto& v : rx.values()) v *= phase;
  const auto b = cg_solve(shifted_normal(f.op, 0.4), rb, rx, CgConfig{15, 0});
  ComplexImage expected = a.x;
  for (auto& v : expected.values()) v *= phase;
  EXPECT_LT(oracle::relative_error(b.x, expected), 1e-12);
}

TEST(Cg, FifteenIterationsConditioning64x64) {
  const SamplingMask mask = make_equispaced_mask(64, 4, 8);
  auto sens = std::make_shared<const CoilSensitivities>(make_coil_maps(64, 64, 4, 3));
  const EncodingOperator op(sens, mask);
  const auto y = oracle::random_kspace(4, 64, 64, mask, 100);
  const ComplexImage x_hat = oracle::random_image(64, 64, 101);
  for (double zeta : {0.03, 0.3, 3.0, 30.0}) {
    const auto res = data_consistency_solve(op, zeta, op.adjoint(y), x_hat, CgConfig{15, 0});
    EXPECT_LE(res.relative_residual, 1e-3) << zeta;
  }
}

TEST(Cg, ToleranceStopsEarly) {
  const auto f = make_fixture(8, 8, 1, 2, 110);
  const ComplexImage rhs = f.op.adjoint(f.y) + 0.3 * f.x_hat;
  const auto res = cg_solve(shifted_normal(f.op, 0.3), rhs, ComplexImage(8, 8), CgConfig{200, 1e-6});
  EXPECT_LE(res.relative_residual, 1e-6);
  EXPECT_LT(res.iterations, 200);
}

TEST(Cg, Errors) {
  const ComplexImage b = oracle::random_image(4, 4, 120);
  const LinearMap id = [](const ComplexImage& x) { return x; };
  EXPECT_THROW(cg_solve(id, b, ComplexImage(4, 4), CgConfig{0, 0}), InvalidArgument);
  EXPECT_THROW(cg_solve(id, b, ComplexImage(4, 4), CgConfig{5, -1}), InvalidArgument);
  EXPECT_THROW(cg_solve(id, b, ComplexImage(4, 3), CgConfig{5, 0}), DimensionMismatch);
  ComplexImage bad = b;
  bad[3] = Complex(std::nan(""), 0);
  try {
    cg_solve(id, bad, ComplexImage(4, 4), CgConfig{5, 0});
    FAIL() << "expected NumericalBreakdown";
  } catch (const NumericalBreakdown& e) {
    EXPECT_EQ(e.index(), 1);
  }
  const LinearMap negative = [](const ComplexImage& x) { return -1.0 * x; };
  EXPECT_THROW(cg_solve(negative, b, ComplexImage(4, 4), CgConfig{5, 0}), NumericalBreakdown);
}

TEST(Dense, SizeGuard) {
  const auto op = fixture::random_operator(65, 64, 1, SamplingMask::full(64), 1);
  EXPECT_THROW(dense_encoding_matrix(op), InvalidArgument);
  EXPECT_THROW(dense_normal_solve(op, 1.0, MultiCoilKSpace(1, 65, 64, op.mask()), ComplexImage(65, 64)),
               InvalidArgument);
}

TEST(SolutionDerivative, MatchesFiniteDifferenceOfDenseSolve) {
  const auto f = make_fixture(8, 8, 2, 2, 130);
  for (double zeta : {0.1, 1.0, 5.0}) {
    const ComplexImage x = dense_normal_solve(f.op, zeta, f.y, f.x_hat);
    const ComplexImage d = cg_solution_derivative(shifted_normal(f.op, zeta), x, f.x_hat, CgConfig{200, 0});
    const double h = 1e-4;
    ComplexImage fd = dense_normal_solve(f.op, zeta + h, f.y, f.x_hat) - dense_normal_solve(f.op, zeta - h, f.y, f.x_hat);
    fd *= 0.5 / h;
    EXPECT_LE(oracle::relative_error(d, fd), 1e-5) << zeta;
  }
}

TEST(SolutionDerivative, DiagonalSystemAndConsistentEstimate) {
  const SamplingMask mask(8, {0, 2, 3, 6});
  const auto op = fixture::unit_coil_operator(1, 8, mask);
  const ComplexImage x_hat = oracle::random_image(1, 8, 140);
  const ComplexImage x = oracle::random_image(1, 8, 141);
  const double zeta = 0.6;
  // along one image row the normal operator is diagonal in k-space: F^H diag(m) F
  const ComplexImage d = cg_solution_derivative(shifted_normal(op, zeta), x, x_hat, CgConfig{20, 0});
  const ComplexImage kd = fft::forward(d);
  const ComplexImage kr = fft::forward(x_hat - x);
  for (int c = 0; c < 8; ++c) {
    const double m = mask.contains(c) ? 1.0 : 0.0;
    EXPECT_LT(std::abs(kd[c] - kr[c] / (m + zeta)), 1e-12);
  }
  const ComplexImage zero = cg_solution_derivative(shifted_normal(op, zeta), x_hat, x_hat, CgConfig{20, 0});
  EXPECT_EQ(norm(zero), 0.0);
}

}  // namespace
