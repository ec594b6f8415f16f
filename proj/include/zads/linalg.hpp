#pragma once

#include <Eigen/Dense>

#include <functional>

#include "zads/image.hpp"
#include "zads/mri_model.hpp"

namespace zads {

using LinearMap = std::function<ComplexImage(const ComplexImage&)>;

struct CgConfig {
  int max_iters = 15;          // M
  double residual_tol = 0.0;   // stop early when ||r|| / ||b|| <= tol; 0 = fixed M steps
};

struct CgResult {
  ComplexImage x;
  int iterations = 0;
  double relative_residual = 0.0;  // ||b - A x|| / ||b||, 0 when b = 0
};

/// Called after every iteration with (iteration, iterate, residual).
using CgObserver = std::function<void(int, const ComplexImage&, const ComplexImage&)>;

/// Conjugate gradients for a Hermitian positive definite `apply_A`, warm
/// started at `x_init`. Inner products are complex; the step ratios use their
/// real parts. Throws NumericalBreakdown naming the iteration on non-finite
/// values.
CgResult cg_solve(const LinearMap& apply_A, const ComplexImage& b, const ComplexImage& x_init,
                  const CgConfig& cfg, const CgObserver& observer = {});

/// x -> E^H E x + zeta x.
LinearMap shifted_normal(const EncodingOperator& op, double zeta);

/// Solves (E^H E + zeta I) x = E^H y + zeta x_hat by CG started at x_hat.
CgResult data_consistency_solve(const EncodingOperator& op, double zeta,
                                const ComplexImage& adjoint_y, const ComplexImage& x_hat,
                                const CgConfig& cfg);

/// d x' / d zeta = A^-1 (x_hat - x') for the solution x' of A x' = E^H y + zeta x_hat.
ComplexImage cg_solution_derivative(const LinearMap& apply_A, const ComplexImage& x_solution,
                                    const ComplexImage& x_hat, const CgConfig& cfg);

inline constexpr int kDenseLimit = 4096;

/// Dense (C*H*W) x (H*W) encoding matrix built from explicit centered-DFT sums,
/// without going through the FFT path. Rows are coil-major, pixels row-major.
Eigen::MatrixXcd dense_encoding_matrix(const EncodingOperator& op);

/// Direct solve of (E^H E + zeta I) x = E^H y + zeta x_hat with a dense LU.
ComplexImage dense_normal_solve(const EncodingOperator& op, double zeta, const MultiCoilKSpace& y,
                                const ComplexImage& x_hat);

}  // namespace zads
