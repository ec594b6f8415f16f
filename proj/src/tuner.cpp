#include "zads/tuner.hpp"

#include <cmath>
#include <exception>
#include <string>

#include "zads/errors.hpp"
#include "zads/logging.hpp"
#include "zads/rng.hpp"

namespace zads {

namespace {

struct HoldoutTerms {
  MultiCoilKSpace residual;  // y_L - E_L x0 on lambda columns, 0 elsewhere
  double y_l1 = 0.0;
  double y_l2 = 0.0;
  double r_l1 = 0.0;
  double r_l2 = 0.0;
};

HoldoutTerms holdout_terms(const MultiCoilKSpace& y_lambda, const EncodingOperator& op_lambda,
                           const ComplexImage& x0) {
  if (y_lambda.coils != op_lambda.coils() || y_lambda.height != op_lambda.height() ||
      y_lambda.width != op_lambda.width())
    throw DimensionMismatch("holdout_loss: k-space does not match the lambda operator");
  HoldoutTerms h{op_lambda.forward(x0)};
  const auto& flags = op_lambda.mask().column_flags();
  for (std::size_t k = 0; k < h.residual.data.size(); ++k) {
    if (!flags[k % y_lambda.width]) continue;
    const Complex y = y_lambda.data[k];
    Complex& r = h.residual.data[k];
    r = y - r;
    h.y_l1 += std::abs(y);
    h.y_l2 += std::norm(y);
    h.r_l1 += std::abs(r);
    h.r_l2 += std::norm(r);
  }
  h.y_l2 = std::sqrt(h.y_l2);
  h.r_l2 = std::sqrt(h.r_l2);
  if (!(h.y_l1 > 0.0) || !(h.y_l2 > 0.0))
    throw UndefinedLoss("holdout_loss: held-out measurements are identically zero");
  return h;
}

// Runs body(i) for i in [0, n) on the OpenMP pool and rethrows the first
// exception (by index) after the loop.
template <typename Body>
void parallel_for_rethrow(int n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

double holdout_loss(const MultiCoilKSpace& y_lambda, const EncodingOperator& op_lambda,
                    const ComplexImage& x0) {
  const HoldoutTerms h = holdout_terms(y_lambda, op_lambda, x0);
  return h.r_l1 / h.y_l1 + h.r_l2 / h.y_l2;
}

ComplexImage holdout_loss_gradient(const MultiCoilKSpace& y_lambda, const EncodingOperator& op_lambda,
                                   const ComplexImage& x0) {
  HoldoutTerms h = holdout_terms(y_lambda, op_lambda, x0);
  // dL = Re<u, dr> with dr = -E dx, u = sign(r) / ||y||_1 + r / (||r||_2 ||y||_2)
  for (auto& r : h.residual.data) {
    const double mag = std::abs(r);
    Complex u{0.0, 0.0};
    if (mag > 0.0) u += r / (mag * h.y_l1);
    if (h.r_l2 > 0.0) u += r / (h.r_l2 * h.y_l2);
    r = u;
  }
  ComplexImage g = op_lambda.adjoint(h.residual);
  g *= -1.0;
  return g;
}

std::vector<double> fd_gradient(const ZadsProblem& problem, const FidelityWeights& w,
                                const TunerConfig& tcfg, const SamplerConfig& scfg,
                                const ComplexImage& x_T, int epoch) {
  if (scfg.noise_mode != NoiseMode::kReplayBank)
    throw InvalidArgument("fd_gradient: requires replay-bank noise (common random numbers)");
  if (!(tcfg.fd_step > 0.0)) throw InvalidArgument("fd_gradient: step must be > 0");
  const int steps = w.size();
  SamplerConfig probe_cfg = scfg;
  probe_cfg.keep_trajectory = false;

  std::vector<double> loss(2 * steps);
  parallel_for_rethrow(2 * steps, [&](int p) {
    FidelityWeights probe = w;
    probe.log_zeta[p / 2] += (p % 2 == 0 ? tcfg.fd_step : -tcfg.fd_step);
    const Reconstruction rec = zads_forward(problem, probe, probe_cfg, x_T, epoch);
    loss[p] = holdout_loss(problem.y_lambda, problem.op_lambda, rec.x0);
    if (!std::isfinite(loss[p])) throw NumericalBreakdown("fd_gradient: non-finite loss at probe", p);
  });

  std::vector<double> g(steps);
  for (int i = 0; i < steps; ++i) g[i] = (loss[2 * i] - loss[2 * i + 1]) / (2.0 * tcfg.fd_step);
  return g;
}

std::vector<ComplexImage> replay_tangents(const Trajectory& traj, const EncodingOperator& op_theta,
                                          const FidelityWeights& w, const SamplerConfig& scfg) {
  const int steps = w.size();
  if (static_cast<int>(traj.records.size()) != steps || scfg.seq.size() != steps)
    throw InvalidArgument("replay_tangents: trajectory has " + std::to_string(traj.records.size()) +
                          " records for " + std::to_string(steps) + " weights");
  for (int i = 0; i < steps; ++i) {
    const double z = w.zeta(i);
    if (traj.records[i].tau != scfg.seq.tau[i] || std::abs(traj.records[i].zeta - z) > 1e-12 * z)
      throw InvalidArgument("replay_tangents: trajectory was recorded with different weights or steps");
  }
  const auto& sched = scfg.schedule;

  std::vector<ComplexImage> tangents(steps);
  parallel_for_rethrow(steps, [&](int j) {
    const auto& rec_j = traj.records[j];
    const double zeta_j = w.zeta(j);
    // d x'_j / d log(zeta_j) = zeta_j A_j^-1 (x_hat_j - x'_j)
    ComplexImage d = cg_solution_derivative(shifted_normal(op_theta, zeta_j), rec_j.x0_refined,
                                            rec_j.x0_hat, scfg.cg);
    d *= zeta_j;
    ComplexImage dx;
    for (int k = j; k >= 0; --k) {
      if (k < j) {
        // Tweedie with frozen eps, then the CG resolvent
        const double zeta_k = w.zeta(k);
        ComplexImage rhs = dx;
        rhs *= zeta_k / std::sqrt(sched.alpha_bar_at(scfg.seq.tau[k]));
        d = cg_solve(shifted_normal(op_theta, zeta_k), rhs, ComplexImage(rhs.height(), rhs.width()),
                     scfg.cg)
                .x;
      }
      // DDIM step with frozen eps and z
      dx = d;
      dx *= std::sqrt(sched.alpha_bar_at(scfg.seq.previous(k)));
    }
    tangents[j] = std::move(dx);
  });
  return tangents;
}

std::vector<double> replay_analytic_gradient(const Trajectory& traj, const ZadsProblem& problem,
                                             const FidelityWeights& w, const SamplerConfig& scfg) {
  const int steps = w.size();
  if (static_cast<int>(traj.records.size()) != steps || scfg.seq.size() != steps)
    throw InvalidArgument("replay_analytic_gradient: trajectory has " + std::to_string(traj.records.size()) +
                          " records for " + std::to_string(steps) + " weights");
  const auto& sched = scfg.schedule;

  // Reverse sweep from x0 back to x_T. With frozen eps and z every step is
  // affine in the state and A_k is Hermitian, so one solve per step suffices:
  //   mu_k = sqrt(ab_prev) lambda_k, nu_k = A_k^-1 mu_k,
  //   g_k = zeta_k Re<nu_k, x_hat_k - x'_k>, lambda_{k+1} = zeta_k nu_k / sqrt(ab_k)
  ComplexImage lambda = holdout_loss_gradient(problem.y_lambda, problem.op_lambda, traj.x0);
  std::vector<double> g(steps);
  for (int k = 0; k < steps; ++k) {
    const auto& rec = traj.records[k];
    const double zeta = w.zeta(k);
    if (rec.tau != scfg.seq.tau[k] || std::abs(rec.zeta - zeta) > 1e-12 * zeta)
      throw InvalidArgument("replay_analytic_gradient: trajectory was recorded with different weights or steps");
    ComplexImage mu = lambda;
    mu *= std::sqrt(sched.alpha_bar_at(scfg.seq.previous(k)));
    const ComplexImage nu =
        cg_solve(shifted_normal(problem.op_theta, zeta), mu, ComplexImage(mu.height(), mu.width()), scfg.cg).x;
    g[k] = zeta * inner(nu, rec.x0_hat - rec.x0_refined).real();
    lambda = nu;
    lambda *= zeta / std::sqrt(sched.alpha_bar_at(rec.tau));
  }
  return g;
}

TuneReport tune(const ZadsProblem& problem, const TunerConfig& tcfg, const SamplerConfig& scfg) {
  if (tcfg.epochs < 1) throw InvalidArgument("tune: epochs must be >= 1");
  if (!(tcfg.learning_rate >= 0.0)) throw InvalidArgument("tune: learning rate must be >= 0");
  if (!(tcfg.init_zeta > 0.0)) throw InvalidArgument("tune: init_zeta must be > 0");
  if (scfg.noise_mode != NoiseMode::kReplayBank)
    throw InvalidArgument("tune: requires replay-bank noise");

  const CountingPrior counter(*problem.prior);
  ZadsProblem counted = problem.with_prior(counter);
  SamplerConfig pass_cfg = scfg;
  pass_cfg.keep_trajectory = true;

  const int steps = scfg.seq.size();
  FidelityWeights w = FidelityWeights::constant(steps, tcfg.init_zeta);
  const ComplexImage x_T = NoiseBank(scfg.seed, problem.op.height(), problem.op.width()).initial_state();

  std::vector<double> m(steps, 0.0);
  std::vector<double> v(steps, 0.0);
  TuneReport report;
  long long loop_nfe = 0;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    const int slice = tcfg.redraw_noise_per_epoch ? epoch : 0;
    if (tcfg.redraw_split_per_epoch && epoch > 0) {
      SsduSplit s = split(problem.op.mask(), problem.split.rho,
                          derive_seed(problem.split.seed, static_cast<std::uint64_t>(epoch)));
      counted = ZadsProblem::make(counter, problem.op, problem.y, std::move(s));
    }
    const long long before = counter.evaluations();
    const Reconstruction rec = zads_forward(counted, w, pass_cfg, x_T, slice);
    loop_nfe += counter.evaluations() - before;
    const double loss = holdout_loss(counted.y_lambda, counted.op_lambda, rec.x0);

    std::vector<double> g = tcfg.grad_mode == GradientMode::kReplayAnalytic
                                ? replay_analytic_gradient(rec.trajectory, counted, w, pass_cfg)
                                : fd_gradient(counted, w, tcfg, pass_cfg, x_T, slice);
    double gnorm = 0.0;
    for (double gi : g) gnorm += gi * gi;
    gnorm = std::sqrt(gnorm);
    report.epochs.push_back({epoch, loss, gnorm, w.zetas()});
    log::info("epoch {} loss {:.6f} |grad| {:.3e}", epoch, loss, gnorm);

    for (int i = 0; i < steps; ++i) {
      double step = 0.0;
      if (tcfg.optimizer == OptimizerKind::kAdam) {
        m[i] = tcfg.adam_beta1 * m[i] + (1.0 - tcfg.adam_beta1) * g[i];
        v[i] = tcfg.adam_beta2 * v[i] + (1.0 - tcfg.adam_beta2) * g[i] * g[i];
        const double mh = m[i] / (1.0 - std::pow(tcfg.adam_beta1, epoch + 1));
        const double vh = v[i] / (1.0 - std::pow(tcfg.adam_beta2, epoch + 1));
        step = tcfg.learning_rate * mh / (std::sqrt(vh) + tcfg.adam_epsilon);
      } else {
        step = tcfg.learning_rate * g[i];
      }
      w.log_zeta[i] -= step;
      if (!std::isfinite(w.log_zeta[i]) || !std::isfinite(std::exp(w.log_zeta[i])) ||
          std::exp(w.log_zeta[i]) <= 0.0)
        throw NumericalBreakdown("tune: non-finite weight update", epoch);
    }
  }

  SamplerConfig final_cfg = scfg;
  final_cfg.keep_trajectory = false;
  const Reconstruction final_rec = zads_forward(problem.with_prior(counter), w, final_cfg, x_T, 0);
  report.final_weights = w;
  report.x0 = final_rec.x0;
  report.final_loss = holdout_loss(problem.y_lambda, problem.op_lambda, final_rec.x0);
  report.tuning_nfe = loop_nfe;
  report.total_nfe = counter.evaluations();
  return report;
}

}  // namespace zads
