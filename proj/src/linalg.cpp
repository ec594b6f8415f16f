#include "zads/linalg.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "zads/errors.hpp"

namespace zads {

CgResult cg_solve(const LinearMap& apply_A, const ComplexImage& b, const ComplexImage& x_init,
                  const CgConfig& cfg, const CgObserver& observer) {
  if (cfg.max_iters < 1) throw InvalidArgument("cg_solve: max_iters must be >= 1");
  if (!(cfg.residual_tol >= 0.0)) throw InvalidArgument("cg_solve: residual_tol must be >= 0");
  require_same_shape(b, x_init, "cg_solve");

  CgResult out{x_init, 0, 0.0};
  const double b_norm = norm(b);
  ComplexImage r = b - apply_A(out.x);
  ComplexImage p = r;
  double rr = squared_norm(r);

  auto relative = [&](double rr_value) { return b_norm > 0.0 ? std::sqrt(rr_value) / b_norm : std::sqrt(rr_value); };

  for (int k = 0; k < cfg.max_iters; ++k) {
    if (rr == 0.0) break;
    if (cfg.residual_tol > 0.0 && relative(rr) <= cfg.residual_tol) break;
    const ComplexImage Ap = apply_A(p);
    const double pAp = inner(p, Ap).real();
    if (!std::isfinite(pAp) || pAp <= 0.0) {
      if (std::isfinite(pAp) && pAp == 0.0 && rr == 0.0) break;
      throw NumericalBreakdown("cg_solve: non-positive or non-finite curvature p^H A p", k + 1);
    }
    const double alpha = rr / pAp;
    out.x += alpha * p;
    r -= alpha * Ap;
    const double rr_next = squared_norm(r);
    if (!std::isfinite(rr_next) || !std::isfinite(alpha))
      throw NumericalBreakdown("cg_solve: non-finite residual", k + 1);
    const double beta = rr_next / rr;
    rr = rr_next;
    // p = r + beta p
    ComplexImage next = r;
    next += beta * p;
    p = std::move(next);
    out.iterations = k + 1;
    if (observer) observer(out.iterations, out.x, r);
  }
  out.relative_residual = relative(rr);
  return out;
}

LinearMap shifted_normal(const EncodingOperator& op, double zeta) {
  return [op, zeta](const ComplexImage& x) {
    ComplexImage out = op.normal(x);
    out += zeta * x;
    return out;
  };
}

CgResult data_consistency_solve(const EncodingOperator& op, double zeta,
                                const ComplexImage& adjoint_y, const ComplexImage& x_hat,
                                const CgConfig& cfg) {
  ComplexImage rhs = adjoint_y;
  rhs += zeta * x_hat;
  return cg_solve(shifted_normal(op, zeta), rhs, x_hat, cfg);
}

ComplexImage cg_solution_derivative(const LinearMap& apply_A, const ComplexImage& x_solution,
                                    const ComplexImage& x_hat, const CgConfig& cfg) {
  ComplexImage rhs = x_hat - x_solution;
  return cg_solve(apply_A, rhs, ComplexImage(rhs.height(), rhs.width()), cfg).x;
}

// ---------------------------------------------------------------------------

namespace {

// Centered unitary DFT matrix: X[k] = sum_n x[n] exp(-2 pi i (k - c)(n - c) / N) / sqrt(N).
Eigen::MatrixXcd centered_dft(int n) {
  Eigen::MatrixXcd f(n, n);
  const int c = n / 2;
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < n; ++k)
    for (int m = 0; m < n; ++m) {
      const long long phase_index = static_cast<long long>(k - c) * (m - c);
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(phase_index % n) / n;
      f(k, m) = std::polar(s, angle);
    }
  return f;
}

}  // namespace

Eigen::MatrixXcd dense_encoding_matrix(const EncodingOperator& op) {
  const int h = op.height();
  const int w = op.width();
  const int n = h * w;
  if (n > kDenseLimit)
    throw InvalidArgument("dense_encoding_matrix: " + std::to_string(n) + " pixels exceeds the dense limit " +
                          std::to_string(kDenseLimit));
  const Eigen::MatrixXcd fh = centered_dft(h);
  const Eigen::MatrixXcd fw = centered_dft(w);
  // row-major 2-D DFT = kron(F_h, F_w)
  Eigen::MatrixXcd f2(n, n);
  for (int r1 = 0; r1 < h; ++r1)
    for (int r2 = 0; r2 < h; ++r2)
      f2.block(r1 * w, r2 * w, w, w) = fh(r1, r2) * fw;
  const auto& flags = op.mask().column_flags();
  for (int row = 0; row < n; ++row)
    if (!flags[row % w]) f2.row(row).setZero();

  const int coils = op.coils();
  Eigen::MatrixXcd e(static_cast<Eigen::Index>(coils) * n, n);
  for (int c = 0; c < coils; ++c) {
    auto s = op.sensitivities().coil(c);
    Eigen::VectorXcd diag(n);
    for (int i = 0; i < n; ++i) diag(i) = s[i];
    e.block(static_cast<Eigen::Index>(c) * n, 0, n, n) = f2 * diag.asDiagonal();
  }
  return e;
}

ComplexImage dense_normal_solve(const EncodingOperator& op, double zeta, const MultiCoilKSpace& y,
                                const ComplexImage& x_hat) {
  const int n = op.height() * op.width();
  if (n > kDenseLimit)
    throw InvalidArgument("dense_normal_solve: " + std::to_string(n) + " pixels exceeds the dense limit " +
                          std::to_string(kDenseLimit));
  if (y.data.size() != static_cast<std::size_t>(op.coils()) * n)
    throw DimensionMismatch("dense_normal_solve: k-space size does not match the operator");
  if (static_cast<int>(x_hat.size()) != n) throw DimensionMismatch("dense_normal_solve: x_hat size mismatch");

  const Eigen::MatrixXcd e = dense_encoding_matrix(op);
  Eigen::MatrixXcd a = e.adjoint() * e;
  a.diagonal().array() += zeta;
  Eigen::Map<const Eigen::VectorXcd> yv(y.data.data(), static_cast<Eigen::Index>(y.data.size()));
  Eigen::Map<const Eigen::VectorXcd> xv(x_hat.values().data(), n);
  const Eigen::VectorXcd rhs = e.adjoint() * yv + zeta * xv;
  const Eigen::VectorXcd sol = a.partialPivLu().solve(rhs);
  ComplexImage out(op.height(), op.width());
  for (int i = 0; i < n; ++i) out[i] = sol(i);
  return out;
}

}  // namespace zads
