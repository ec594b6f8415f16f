#include "zads/samplers.hpp"

#include <string>
#include <utility>

#include "zads/errors.hpp"
#include "zads/logging.hpp"
#include "zads/rng.hpp"

namespace zads {

FidelityWeights FidelityWeights::constant(int steps, double zeta) {
  if (!(zeta > 0.0) || !std::isfinite(zeta)) throw InvalidArgument("FidelityWeights: zeta must be positive");
  return FidelityWeights{std::vector<double>(steps, std::log(zeta))};
}

std::vector<double> FidelityWeights::zetas() const {
  std::vector<double> out;
  for (double l : log_zeta) out.push_back(std::exp(l));
  return out;
}

namespace {

constexpr std::uint64_t kInitialTag = 0x494e4954;  // "INIT"
constexpr std::uint64_t kStepTag = 0x53544550;     // "STEP"
constexpr std::uint64_t kFreshTag = 0x46524553;    // "FRES"

}  // namespace

ComplexImage NoiseBank::initial_state() const {
  return complex_gaussian_image(height_, width_, derive_seed(seed_, kInitialTag));
}

ComplexImage NoiseBank::step_noise(int epoch, int step) const {
  return complex_gaussian_image(height_, width_,
                                derive_seed(seed_, kStepTag ^ (static_cast<std::uint64_t>(epoch) << 32),
                                            static_cast<std::uint64_t>(step)));
}

ComplexImage ddim_step(const NoiseSchedule& sched, int tau_i, int tau_prev,
                       const ComplexImage& x0_ref, const ComplexImage& eps_hat, double eta,
                       const ComplexImage& z) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("ddim_step: eta must lie in [0, 1]");
  require_same_shape(x0_ref, eps_hat, "ddim_step");
  const double s = sigma(sched, tau_i, tau_prev, eta);
  const double ab_prev = sched.alpha_bar_at(tau_prev);
  double eps_coeff = 1.0 - ab_prev - s * s;
  if (eps_coeff < -1e-12)
    throw ScheduleInconsistency("ddim_step: sigma^2 exceeds 1 - alpha_bar at step " + std::to_string(tau_i));
  eps_coeff = std::sqrt(std::max(0.0, eps_coeff));

  ComplexImage out = x0_ref;
  out *= std::sqrt(ab_prev);
  out += eps_coeff * eps_hat;
  if (s > 0.0) {
    if (z.empty()) throw InvalidArgument("ddim_step: noise required when sigma > 0");
    out += s * z;
  }
  return out;
}

namespace {

struct Refined {
  ComplexImage x0_ref;
  ComplexImage correction;  // added after the DDIM step; empty for none
  double zeta = 0.0;
};

// Shared reverse loop. `refine(i, tweedie, x_t)` turns the Tweedie estimate
// into the x0 the DDIM step is taken from.
template <typename Refine>
Reconstruction run_pass(const ScorePrior& prior, const SamplerConfig& cfg, ComplexImage x,
                        int epoch, Refine&& refine) {
  if (!(cfg.eta >= 0.0 && cfg.eta <= 1.0)) throw InvalidArgument("sampler: eta must lie in [0, 1]");
  const auto& tau = cfg.seq.tau;
  const int steps = cfg.seq.size();
  if (steps < 1) throw InvalidArgument("sampler: empty step sequence");
  for (int i = 0; i < steps; ++i) {
    if (tau[i] < 1 || tau[i] > cfg.schedule.steps() || (i > 0 && tau[i] <= tau[i - 1]))
      throw InvalidArgument("sampler: step sequence must be strictly increasing within [1, T]");
  }

  const NoiseBank bank(cfg.seed, x.height(), x.width());
  Rng fresh(derive_seed(cfg.seed, kFreshTag, static_cast<std::uint64_t>(epoch)));

  Reconstruction out;
  if (cfg.keep_trajectory) out.trajectory.records.resize(steps);

  for (int i = steps - 1; i >= 0; --i) {
    const int t = tau[i];
    const int t_prev = cfg.seq.previous(i);
    TweedieEstimate est = tweedie_denoise(prior, x, t, cfg.schedule);
    Refined r = refine(i, est, x);

    ComplexImage z;
    if (t_prev > 0 && cfg.eta > 0.0) {
      if (cfg.noise_mode == NoiseMode::kReplayBank) {
        z = bank.step_noise(epoch, i);
      } else {
        z = ComplexImage(x.height(), x.width());
        for (auto& v : z.values()) v = fresh.complex_normal();
      }
    }
    ComplexImage next = ddim_step(cfg.schedule, t, t_prev, r.x0_ref, est.eps_hat, cfg.eta, z);
    if (!r.correction.empty()) next += r.correction;
    if (!next.all_finite()) throw NumericalBreakdown("sampler: non-finite state", t);

    if (cfg.keep_trajectory) {
      auto& rec = out.trajectory.records[i];
      rec.tau = t;
      rec.zeta = r.zeta;
      rec.x_t = std::move(x);
      rec.eps_hat = std::move(est.eps_hat);
      rec.x0_hat = std::move(est.x0_hat);
      rec.x0_refined = std::move(r.x0_ref);
      rec.z = std::move(z);
    }
    x = std::move(next);
  }
  out.x0 = x;
  if (cfg.keep_trajectory) out.trajectory.x0 = x;
  return out;
}

CgConfig checked(const CgConfig& cfg) {
  if (cfg.max_iters < 1) throw InvalidArgument("sampler: CG max_iters must be >= 1");
  return cfg;
}

}  // namespace

Reconstruction ddim_reconstruct(const ScorePrior& prior, int height, int width,
                                const SamplerConfig& cfg) {
  const NoiseBank bank(cfg.seed, height, width);
  return run_pass(prior, cfg, bank.initial_state(), 0,
                  [](int, const TweedieEstimate& est, const ComplexImage&) {
                    return Refined{est.x0_hat, {}, 0.0};
                  });
}

namespace {

// Loss and x_t-gradient given an existing Tweedie estimate (no extra NFE).
std::pair<double, ComplexImage> likelihood_gradient(const ScorePrior& prior, const EncodingOperator& op,
                                                    const MultiCoilKSpace& y, const ComplexImage& x0_hat,
                                                    int t, double ab) {
  MultiCoilKSpace residual = op.forward(x0_hat);
  if (residual.data.size() != y.data.size()) throw DimensionMismatch("dps: k-space size mismatch");
  const auto& flags = op.mask().column_flags();
  double loss = 0.0;
  for (std::size_t k = 0; k < residual.data.size(); ++k) {
    if (!flags[k % residual.width]) continue;
    residual.data[k] -= y.data[k];
    loss += std::norm(residual.data[k]);
  }
  ComplexImage g = op.adjoint(residual);  // E^H (E x0 - y)
  g *= 2.0;
  if (prior.has_exact_jacobian()) {
    // J_x0^H g = (g - sqrt(1 - ab) J_eps^H g) / sqrt(ab)
    ComplexImage je = prior.noise_jacobian_adjoint(g, t, ab);
    g -= std::sqrt(1.0 - ab) * je;
  }
  g *= 1.0 / std::sqrt(ab);
  return {loss, std::move(g)};
}

}  // namespace

LikelihoodGradient dps_likelihood_gradient(const ScorePrior& prior, const EncodingOperator& op,
                                           const MultiCoilKSpace& y, const ComplexImage& x_t, int t,
                                           const NoiseSchedule& sched) {
  LikelihoodGradient out;
  out.tweedie = tweedie_denoise(prior, x_t, t, sched);
  auto [loss, g] = likelihood_gradient(prior, op, y, out.tweedie.x0_hat, t, sched.alpha_bar_at(t));
  out.loss = loss;
  out.gradient = std::move(g);
  return out;
}

Reconstruction dps_reconstruct(const ScorePrior& prior, const EncodingOperator& op,
                               const MultiCoilKSpace& y, double zeta, const SamplerConfig& cfg) {
  if (!(zeta >= 0.0)) throw InvalidArgument("dps_reconstruct: zeta must be >= 0");
  const NoiseBank bank(cfg.seed, op.height(), op.width());
  return run_pass(prior, cfg, bank.initial_state(), 0,
                  [&](int i, const TweedieEstimate& est, const ComplexImage&) {
                    if (zeta == 0.0) return Refined{est.x0_hat, {}, 0.0};
                    const int t = cfg.seq.tau[i];
                    auto [loss, g] = likelihood_gradient(prior, op, y, est.x0_hat, t,
                                                         cfg.schedule.alpha_bar_at(t));
                    log::debug("dps step tau={} loss={:.4e}", t, loss);
                    g *= -zeta;
                    return Refined{est.x0_hat, std::move(g), zeta};
                  });
}

Reconstruction dds_reconstruct(const ScorePrior& prior, const EncodingOperator& op,
                               const MultiCoilKSpace& y, double zeta, const SamplerConfig& cfg) {
  if (!(zeta > 0.0)) throw InvalidArgument("dds_reconstruct: zeta must be > 0");
  const CgConfig cg = checked(cfg.cg);
  const ComplexImage adjoint_y = op.adjoint(y);
  const NoiseBank bank(cfg.seed, op.height(), op.width());
  return run_pass(prior, cfg, bank.initial_state(), 0,
                  [&](int i, const TweedieEstimate& est, const ComplexImage&) {
                    try {
                      CgResult sol = data_consistency_solve(op, zeta, adjoint_y, est.x0_hat, cg);
                      return Refined{std::move(sol.x), {}, zeta};
                    } catch (const NumericalBreakdown& e) {
                      throw NumericalBreakdown(std::string("dds step: ") + e.what(), cfg.seq.tau[i]);
                    }
                  });
}

ZadsProblem ZadsProblem::make(const ScorePrior& prior, EncodingOperator op, MultiCoilKSpace y,
                              SsduSplit split) {
  if (y.coils != op.coils() || y.height != op.height() || y.width != op.width())
    throw DimensionMismatch("ZadsProblem: k-space does not match the operator");
  if (!split.theta.is_subset_of(op.mask()) || !split.lambda.is_subset_of(op.mask()))
    throw InvalidArgument("ZadsProblem: split is not a partition of the acquired columns");
  // rebase y on the operator's mask so the restrictions below are well defined
  y.mask = op.mask();
  EncodingOperator op_theta = op.restricted(split.theta);
  EncodingOperator op_lambda = op.restricted(split.lambda);
  MultiCoilKSpace y_theta = restrict_kspace(y, split.theta);
  MultiCoilKSpace y_lambda = restrict_kspace(y, split.lambda);
  ComplexImage adjoint_y_theta = op_theta.adjoint(y_theta);
  ComplexImage adjoint_y = op.adjoint(y);
  return ZadsProblem{&prior,
                     std::move(op),
                     std::move(y),
                     std::move(split),
                     std::move(op_theta),
                     std::move(op_lambda),
                     std::move(y_theta),
                     std::move(y_lambda),
                     std::move(adjoint_y_theta),
                     std::move(adjoint_y)};
}

ZadsProblem ZadsProblem::with_prior(const ScorePrior& other) const {
  ZadsProblem copy = *this;
  copy.prior = &other;
  return copy;
}

namespace {

Reconstruction weighted_pass(const ZadsProblem& problem, const EncodingOperator& op,
                             const ComplexImage& adjoint_y, const FidelityWeights& w,
                             const SamplerConfig& cfg, const ComplexImage& x_T, int epoch,
                             const char* name) {
  if (w.size() != cfg.seq.size())
    throw InvalidArgument(std::string(name) + ": " + std::to_string(w.size()) + " weights for " +
                          std::to_string(cfg.seq.size()) + " steps");
  if (x_T.height() != op.height() || x_T.width() != op.width())
    throw DimensionMismatch(std::string(name) + ": x_T shape does not match the operator");
  const CgConfig cg = checked(cfg.cg);
  return run_pass(*problem.prior, cfg, x_T, epoch,
                  [&](int i, const TweedieEstimate& est, const ComplexImage&) {
                    const double zeta = w.zeta(i);
                    if (!(zeta > 0.0) || !std::isfinite(zeta))
                      throw NumericalBreakdown(std::string(name) + ": weight is not a positive finite number", i);
                    try {
                      CgResult sol = data_consistency_solve(op, zeta, adjoint_y, est.x0_hat, cg);
                      log::debug("{} step tau={} zeta={:.4g} cg_iters={} rel_res={:.3e}", name,
                                 cfg.seq.tau[i], zeta, sol.iterations, sol.relative_residual);
                      return Refined{std::move(sol.x), {}, zeta};
                    } catch (const NumericalBreakdown& e) {
                      throw NumericalBreakdown(std::string(name) + " step: " + e.what(), cfg.seq.tau[i]);
                    }
                  });
}

}  // namespace

Reconstruction zads_forward(const ZadsProblem& problem, const FidelityWeights& w,
                            const SamplerConfig& cfg, const ComplexImage& x_T, int epoch) {
  return weighted_pass(problem, problem.op_theta, problem.adjoint_y_theta, w, cfg, x_T, epoch,
                       "zads_forward");
}

Reconstruction zads_inference(const ZadsProblem& problem, const FidelityWeights& w,
                              const SamplerConfig& cfg, const ComplexImage& x_T, int epoch) {
  return weighted_pass(problem, problem.op, problem.adjoint_y, w, cfg, x_T, epoch, "zads_inference");
}

}  // namespace zads
