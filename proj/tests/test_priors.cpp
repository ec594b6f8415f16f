#include <gtest/gtest.h>

#include "oracles.hpp"
#include "zads/errors.hpp"
#include "zads/fft.hpp"
#include "zads/priors.hpp"
#include "zads/rng.hpp"

namespace {

using namespace zads;

std::vector<double> random_spectrum(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  std::vector<double> s(n);
  for (auto& v : s) v = u(gen);
  return s;
}

TEST(GaussianPrior, UnitCovarianceZeroMean) {
  const NoiseSchedule sched = make_linear_schedule(1000);
  const GaussianPrior p(ComplexImage(8, 8), std::vector<double>(64, 1.0));
  const ComplexImage x = oracle::random_image(8, 8, 1);
  for (int t : {1, 300, 1000}) {
    const double ab = sched.alpha_bar_at(t);
    ComplexImage expected = x;
    expected *= std::sqrt(1 - ab);
    EXPECT_LT(oracle::max_abs_diff(p.predict_noise(x, t, ab), expected), 1e-14);
    const auto est = tweedie_denoise(p, x, t, sched);
    ComplexImage shrunk = x;
    shrunk *= std::sqrt(ab);
    EXPECT_LT(oracle::max_abs_diff(est.x0_hat, shrunk), 1e-13);
  }
}

TEST(GaussianPrior, ZeroCovarianceReturnsMean) {
  const NoiseSchedule sched = make_linear_schedule(1000);
  const ComplexImage mu = oracle::random_image(8, 8, 2);
  const GaussianPrior p(mu, std::vector<double>(64, 0.0));
  for (int t : {1, 500, 1000}) {
    const auto est = tweedie_denoise(p, oracle::random_image(8, 8, 3 + t), t, sched);
    EXPECT_LT(oracle::max_abs_diff(est.x0_hat, mu), 1e-12);
  }
}

TEST(GaussianPrior, MatchesDensePosteriorMean) {
  const NoiseSchedule sched = make_linear_schedule(1000);
  const int h = 8, w = 8, n = 64;
  const ComplexImage mu = oracle::random_image(h, w, 4);
  const auto spec = random_spectrum(n, 5);
  const GaussianPrior p(mu, spec);
  const Eigen::MatrixXcd d = oracle::centered_dft2(h, w);
  Eigen::MatrixXcd sigma = d.adjoint() * Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(spec.data(), n)).asDiagonal() * d;
  for (int t : {10, 400, 900}) {
    const double ab = sched.alpha_bar_at(t);
    const ComplexImage x = oracle::random_image(h, w, 6 + t);
    // E[x0 | x_t] = mu + sqrt(ab) Sigma (ab Sigma + (1 - ab) I)^-1 (x_t - sqrt(ab) mu)
    const Eigen::MatrixXcd cov_t = ab * sigma + (1 - ab) * Eigen::MatrixXcd::Identity(n, n);
    const Eigen::VectorXcd r = oracle::to_vector(x) - std::sqrt(ab) * oracle::to_vector(mu);
    const Eigen::VectorXcd mean = oracle::to_vector(mu) + std::sqrt(ab) * sigma * cov_t.lu().solve(r);
    const auto est = tweedie_denoise(p, x, t, sched);
    EXPECT_LT((oracle::to_vector(est.x0_hat) - mean).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_EQ(gaussian_predict_noise(p, x, t, sched), est.eps_hat);
  }
}

TEST(Tweedie, ExactInversion) {
  const NoiseSchedule sched = make_linear_schedule(1000);
  const ComplexImage x0 = oracle::random_image(8, 8, 7);
  const ComplexImage eps = oracle::random_image(8, 8, 8);
  for (int t : {1, 250, 999}) {
    const double ab = sched.alpha_bar_at(t);
    const ComplexImage x_t = std::sqrt(ab) * x0 + std::sqrt(1 - ab) * eps;
    const FrozenNoisePrior frozen({{t, eps}});
    EXPECT_LT(oracle::max_abs_diff(tweedie_denoise(frozen, x_t, t, sched).x0_hat, x0), 1e-12);
  }
}

TEST(Tweedie, ZeroStub) {
  const NoiseSchedule sched = make_linear_schedule(1000);
  const ComplexImage x = oracle::random_image(8, 8, 9);
  const auto est = tweedie_denoise(ZeroScorePrior{}, x, 600, sched);
  ComplexImage expected = x;
  expected *= 1.0 / std::sqrt(sched.alpha_bar_at(600));
  EXPECT_LT(oracle::max_abs_diff(est.x0_hat, expected), 1e-14);
  for (const auto& v : est.eps_hat.values()) EXPECT_EQ(v, Complex(0, 0));
}

TEST(GaussianPrior, MonteCarloErrorMatchesPosteriorTrace) {
  const NoiseSchedule sched = make_linear_schedule(1000);
  const int h = 8, w = 8;
  const GaussianPrior p(oracle::random_image(h, w, 10), GaussianPrior::power_law_spectrum(h, w, 0.5, 2.0, 1.5));
  for (int t : {50, 500}) {
    const double ab = sched.alpha_bar_at(t);
    double total = 0;
    const int draws = 10000;
    for (int k = 0; k < draws; ++k) {
      const ComplexImage x0 = p.sample(derive_seed(11, k, t));
      const ComplexImage eps = complex_gaussian_image(h, w, derive_seed(12, k, t));
      const ComplexImage x_t = std::sqrt(ab) * x0 + std::sqrt(1 - ab) * eps;
      total += squared_norm(tweedie_denoise(p, x_t, t, sched).x0_hat - x0);
    }
    EXPECT_NEAR(total / draws, p.tweedie_error_trace(ab), 0.05 * p.tweedie_error_trace(ab));
  }
}

TEST(GaussianPrior, PowerLawSpectrumScale) {
  const auto s = GaussianPrior::power_law_spectrum(32, 16, 0.02, 3.0, 1.5);
  double mean = 0;
  for (double v : s) {
    EXPECT_GT(v, 0.0);
    mean += v;
  }
  EXPECT_NEAR(mean / s.size(), 0.02, 1e-12);
  // DC sits at the centre of the centred layout and carries the largest variance
  EXPECT_EQ(*std::max_element(s.begin(), s.end()), s[16 * 16 + 8]);
}

TEST(GaussianPrior, SampleCovariance) {
  const int h = 8, w = 8;
  const auto spec = random_spectrum(64, 13);
  const GaussianPrior p(ComplexImage(h, w), spec);
  std::vector<double> acc(64, 0.0);
  const int draws = 4000;
  for (int k = 0; k < draws; ++k) {
    const ComplexImage f = fft::forward(p.sample(static_cast<std::uint64_t>(k)));
    for (int i = 0; i < 64; ++i) acc[i] += std::norm(f[i]);
  }
  double rel = 0;
  for (int i = 0; i < 64; ++i) rel += std::abs(acc[i] / draws - spec[i]) / spec[i];
  EXPECT_LT(rel / 64, 0.05);
}

TEST(GaussianPrior, JacobianMatchesFiniteDifferences) {
  const NoiseSchedule sched = make_linear_schedule(1000);
  const GaussianPrior p(oracle::random_image(8, 8, 14), random_spectrum(64, 15));
  const ComplexImage x = oracle::random_image(8, 8, 16);
  const ComplexImage v = oracle::random_image(8, 8, 17);
  const ComplexImage u = oracle::random_image(8, 8, 18);
  for (int t : {20, 700}) {
    const double ab = sched.alpha_bar_at(t);
    const double h = 1e-5;
    ComplexImage fd = p.predict_noise(x + h * v, t, ab) - p.predict_noise(x - h * v, t, ab);
    fd *= 0.5 / h;
    const ComplexImage jv = p.noise_jacobian(v, t, ab);
    EXPECT_LE(norm(fd - jv) / norm(jv), 1e-6);
    // adjoint consistency
    const Complex lhs = inner(u, jv);
    const Complex rhs = inner(p.noise_jacobian_adjoint(u, t, ab), v);
    EXPECT_LT(std::abs(lhs - rhs), 1e-12 * norm(u) * norm(v));
  }
}

TEST(Priors, Determinism) {
  const GaussianPrior p(oracle::random_image(8, 8, 19), random_spectrum(64, 20));
  const ComplexImage x = oracle::random_image(8, 8, 21);
  EXPECT_EQ(p.predict_noise(x, 5, 0.9), p.predict_noise(x, 5, 0.9));
  EXPECT_EQ(p.sample(3), p.sample(3));
}

TEST(Priors, FrozenAndCounting) {
  const ComplexImage e = oracle::random_image(4, 4, 22);
  const FrozenNoisePrior frozen({{7, e}});
  EXPECT_EQ(frozen.predict_noise(ComplexImage(4, 4), 7, 0.5), e);
  EXPECT_THROW(frozen.predict_noise(ComplexImage(4, 4), 8, 0.5), InvalidArgument);
  EXPECT_EQ(frozen.noise_jacobian(e, 7, 0.5), ComplexImage(4, 4));
  EXPECT_EQ(frozen.noise_jacobian_adjoint(e, 7, 0.5), ComplexImage(4, 4));

  const ZeroScorePrior zero;
  const CountingPrior counted(zero);
  for (int i = 0; i < 5; ++i) counted.predict_noise(e, 1, 0.5);
  EXPECT_EQ(counted.evaluations(), 5);
  EXPECT_TRUE(counted.has_exact_jacobian());
}

TEST(Priors, ConstructionErrors) {
  EXPECT_THROW(GaussianPrior(ComplexImage(4, 4), std::vector<double>(15, 1.0)), DimensionMismatch);
  EXPECT_THROW(GaussianPrior(ComplexImage(4, 4), std::vector<double>(16, -1.0)), InvalidArgument);
}

}  // namespace
