#include "zads/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "zads/errors.hpp"
#include "zads/logging.hpp"
#include "zads/npy.hpp"
#include "zads/plugin.hpp"

namespace zads::app {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
      dynamic_cast<const DimensionMismatch*>(&e) || dynamic_cast<const InfeasibleSplit*>(&e))
    return kConfigFailure;
  if (dynamic_cast<const NumericalBreakdown*>(&e) || dynamic_cast<const ScheduleInconsistency*>(&e) ||
      dynamic_cast<const UndefinedLoss*>(&e))
    return kNumericalFailure;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const PluginTimeout*>(&e) ||
      dynamic_cast<const ProtocolError*>(&e) || dynamic_cast<const TransportError*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e))
    return kIoFailure;
  return kNumericalFailure;
}

namespace {

std::vector<std::size_t> stack_shape(int coils, int h, int w) {
  return {static_cast<std::size_t>(coils), static_cast<std::size_t>(h), static_cast<std::size_t>(w)};
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

std::vector<int> flags_to_lines(const std::vector<double>& flags) {
  std::vector<int> lines;
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (flags[i] != 0.0) lines.push_back(static_cast<int>(i));
  return lines;
}

// Output files are listed by name with their SHA-256; the manifest carries no
// timestamps or absolute output paths, so replays compare equal byte for byte.
void write_manifest(const fs::path& out, const std::string& verb, json body,
                    const std::vector<std::string>& files) {
  json hashes = json::object();
  for (const auto& f : files) hashes[f] = sha256_file(out / f);
  body["tool"] = "zads";
  body["version"] = kVersion;
  body["verb"] = verb;
  body["outputs"] = hashes;
  write_text(out / "manifest.json", body.dump(2) + "\n");
}

json config_body(const Config& c) { return json{{"config", to_json(c)}}; }

json resolved_common(const Config& c, const Scene& scene) {
  const Seeds s = derive_seeds(c.seed);
  return json{{"seeds",
               {{"phantom", s.phantom}, {"coils", s.coils}, {"noise", s.noise}, {"split", s.split},
                {"sampler", s.sampler}}},
              {"mask_lines", scene.mask.lines()},
              {"tau", build_sequence(c).tau}};
}

std::string csv_number(double v) { return fmt::format("{:.10g}", v); }

void write_trajectory(const fs::path& dir, const Trajectory& traj) {
  prepare_out(dir);
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const auto& r = traj.records[i];
    const std::string stem = fmt::format("step_{:02d}_tau_{:04d}_", i, r.tau);
    npy::write_image(dir / (stem + "x_t.npy"), r.x_t);
    npy::write_image(dir / (stem + "eps_hat.npy"), r.eps_hat);
    npy::write_image(dir / (stem + "x0_hat.npy"), r.x0_hat);
    npy::write_image(dir / (stem + "x0_refined.npy"), r.x0_refined);
  }
}

}  // namespace

Scene simulate_scene(const Config& c) {
  const Seeds s = derive_seeds(c.seed);
  const int h = c.image.height;
  const int w = c.image.width;
  Scene scene;
  scene.truth = c.image.source == "phantom" ? make_phantom(h, w, s.phantom)
                                           : make_gaussian_prior(c).sample(s.phantom);
  scene.sens = std::make_shared<const CoilSensitivities>(make_coil_maps(h, w, c.acquisition.coils, s.coils));
  scene.mask = make_equispaced_mask(w, c.acquisition.acceleration, c.acquisition.acs);
  const EncodingOperator op(scene.sens, scene.mask);
  scene.y = simulate_kspace(op, *scene.truth, c.acquisition.noise_std, s.noise);
  return scene;
}

Scene load_scene(const fs::path& dir, const Config& c) {
  for (const char* name : {"kspace.npy", "coils.npy", "mask.npy"})
    if (!fs::exists(dir / name)) throw IoError("missing input file " + (dir / name).string());

  const npy::Array k = npy::read(dir / "kspace.npy");
  const npy::Array s = npy::read(dir / "coils.npy");
  const npy::Array m = npy::read(dir / "mask.npy");
  if (k.shape.size() != 3 || s.shape != k.shape)
    throw DimensionMismatch("kspace.npy and coils.npy must both be coils x height x width");
  const int coils = static_cast<int>(k.shape[0]);
  const int h = static_cast<int>(k.shape[1]);
  const int w = static_cast<int>(k.shape[2]);
  if (m.shape.size() != 1 || static_cast<int>(m.shape[0]) != w)
    throw DimensionMismatch("mask.npy must be a length-width vector");

  Scene scene;
  auto sens = std::make_shared<CoilSensitivities>();
  sens->coils = coils;
  sens->height = h;
  sens->width = w;
  sens->maps = npy::to_complex(s);
  scene.sens = sens;
  scene.mask = SamplingMask(w, flags_to_lines(npy::to_real(m)), c.acquisition.acceleration,
                            c.acquisition.acs);
  for (int line : scene.mask.acs_lines())
    if (!scene.mask.contains(line))
      throw ConfigError("mask.npy lacks calibration column " + std::to_string(line) +
                        " implied by acquisition.acs");
  scene.y = MultiCoilKSpace(coils, h, w, scene.mask);
  scene.y.data = npy::to_complex(k);
  if (!scene.y.zero_outside_mask()) throw DimensionMismatch("kspace.npy has data outside mask.npy");
  if (fs::exists(dir / "image.npy")) {
    ComplexImage truth = npy::read_image(dir / "image.npy");
    if (truth.height() != h || truth.width() != w)
      throw DimensionMismatch("image.npy does not match the k-space shape");
    scene.truth = std::move(truth);
  }
  return scene;
}

Scene resolve_scene(const Config& c) {
  return c.inputs.empty() ? simulate_scene(c) : load_scene(c.inputs, c);
}

GaussianPrior make_gaussian_prior(const Config& c) {
  const int h = c.image.height;
  const int w = c.image.width;
  ComplexImage mean = c.prior.mean == "phantom" ? make_phantom(h, w, c.prior.mean_seed) : ComplexImage(h, w);
  return GaussianPrior(std::move(mean),
                       GaussianPrior::power_law_spectrum(h, w, c.prior.pixel_variance, c.prior.corner,
                                                         c.prior.exponent));
}

std::unique_ptr<ScorePrior> make_prior(const Config& c) {
  if (c.prior.kind == "zero") return std::make_unique<ZeroScorePrior>();
  if (c.prior.kind == "plugin") {
    const auto deadline = std::chrono::milliseconds(static_cast<long long>(c.prior.plugin_timeout_s * 1000));
    return std::make_unique<plugin::PluginPrior>(
        plugin::PluginClient::spawn(c.prior.plugin, c.image.height, c.image.width, deadline));
  }
  return std::make_unique<GaussianPrior>(make_gaussian_prior(c));
}

SsduSplit make_split(const Config& c, const SamplingMask& mask) {
  return split(mask, c.ssdu.rho, derive_seeds(c.seed).split);
}

ReconstructResult run_reconstruct(const Config& c, const Scene& scene, const ScorePrior& prior,
                                  const std::optional<FidelityWeights>& weights) {
  if (scene.y.height != c.image.height || scene.y.width != c.image.width)
    throw DimensionMismatch("input k-space is " + std::to_string(scene.y.height) + "x" +
                            std::to_string(scene.y.width) + " but the config declares " +
                            std::to_string(c.image.height) + "x" + std::to_string(c.image.width));
  if (weights && c.method != "zads") throw ConfigError("a weights file is only valid with method zads");

  const EncodingOperator op(scene.sens, scene.mask);
  const SsduSplit sp = make_split(c, scene.mask);
  const CountingPrior counted(prior);
  SamplerConfig scfg = build_sampler_config(c);

  ReconstructResult out;
  if (c.method == "zf") {
    out.x0 = op.adjoint(scene.y);
  } else if (c.method == "dps") {
    Reconstruction r = dps_reconstruct(counted, op, scene.y, c.sampler.zeta, scfg);
    out.x0 = std::move(r.x0);
    out.trajectory = std::move(r.trajectory);
  } else if (c.method == "dds") {
    if (!(c.sampler.zeta > 0.0)) throw ConfigError("method dds needs sampler.zeta > 0");
    Reconstruction r = dds_reconstruct(counted, op, scene.y, c.sampler.zeta, scfg);
    out.x0 = std::move(r.x0);
    out.trajectory = std::move(r.trajectory);
  } else {
    const ZadsProblem problem = ZadsProblem::make(counted, op, scene.y, sp);
    FidelityWeights w;
    if (weights) {
      if (weights->size() != scfg.seq.size())
        throw ConfigError("weights file has " + std::to_string(weights->size()) + " entries for " +
                          std::to_string(scfg.seq.size()) + " steps");
      w = *weights;
    } else {
      if (scfg.noise_mode != NoiseMode::kReplayBank)
        throw ConfigError("tuning requires sampler.noise_mode = replay_bank");
      TuneReport report = tune(problem, build_tuner_config(c), scfg);
      w = report.final_weights;
      out.tuning = std::move(report);
    }
    const bool theta_only = c.sampler.zads_data == "theta";
    if (out.tuning && theta_only && !scfg.keep_trajectory) {
      out.x0 = out.tuning->x0;  // tune already ran the final-weight pass on theta
    } else {
      const ComplexImage x_T = NoiseBank(scfg.seed, op.height(), op.width()).initial_state();
      Reconstruction r = theta_only ? zads_forward(problem, w, scfg, x_T, 0)
                                    : zads_inference(problem, w, scfg, x_T, 0);
      out.x0 = std::move(r.x0);
      out.trajectory = std::move(r.trajectory);
    }
    out.weights = std::move(w);
  }
  out.nfe = counted.evaluations();
  out.holdout_loss = holdout_loss(restrict_kspace(scene.y, sp.lambda), op.restricted(sp.lambda), out.x0);
  if (scene.truth) out.metrics = evaluate(*scene.truth, out.x0);
  return out;
}

std::vector<SweepRow> run_sweep(const Config& c, const Scene& scene, const ScorePrior& prior) {
  if (!scene.truth) throw ConfigError("sweep needs a reference image (image.npy or a simulated scene)");
  std::vector<double> grid = c.sweep_grid;
  std::sort(grid.begin(), grid.end());
  std::vector<SweepRow> rows(grid.size());
  std::vector<std::exception_ptr> errors(grid.size());
  const int n = static_cast<int>(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      Config ci = c;
      ci.method = "dds";
      ci.sampler.zeta = grid[i];
      ci.sampler.export_trajectory = false;
      ci.sampler.weights_file.clear();
      const ReconstructResult r = run_reconstruct(ci, scene, prior);
      rows[i] = SweepRow{grid[i], r.metrics->psnr, r.metrics->ssim, r.holdout_loss};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

FidelityWeights read_weights(const fs::path& path, int steps) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open weights file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.contains("zeta") || !j["zeta"].is_array()) throw ConfigError(path.string() + ": expected a zeta array");
  std::vector<double> zeta;
  try {
    zeta = j["zeta"].get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ConfigError(path.string() + ": zeta entries must be numbers");
  }
  if (static_cast<int>(zeta.size()) != steps)
    throw ConfigError(path.string() + ": " + std::to_string(zeta.size()) + " weights for " +
                      std::to_string(steps) + " steps");
  FidelityWeights w;
  if (j.contains("log_zeta")) {
    w.log_zeta = j["log_zeta"].get<std::vector<double>>();
    if (w.log_zeta.size() != zeta.size()) throw ConfigError(path.string() + ": log_zeta/zeta length mismatch");
  } else {
    for (double z : zeta) {
      if (!(z > 0.0) || !std::isfinite(z)) throw ConfigError(path.string() + ": weights must be positive");
      w.log_zeta.push_back(std::log(z));
    }
  }
  return w;
}

void write_weights(const fs::path& path, const FidelityWeights& w, const StepSequence& seq) {
  const json j{{"tau", seq.tau}, {"zeta", w.zetas()}, {"log_zeta", w.log_zeta}};
  write_text(path, j.dump(2) + "\n");
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return csv_number(v);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

void cmd_simulate(const Config& c, const fs::path& out) {
  prepare_out(out);
  const Scene scene = simulate_scene(c);
  const int h = c.image.height;
  const int w = c.image.width;
  const int coils = c.acquisition.coils;
  npy::write_image(out / "image.npy", *scene.truth);
  npy::write(out / "coils.npy", npy::from_complex(scene.sens->maps, stack_shape(coils, h, w)));
  npy::write(out / "mask.npy", npy::from_flags(scene.mask.column_flags()));
  npy::write(out / "kspace.npy", npy::from_complex(scene.y.data, stack_shape(coils, h, w)));

  json body = config_body(c);
  body["resolved"] = resolved_common(c, scene);
  body["resolved"]["sampled_lines"] = scene.mask.count();
  write_manifest(out, "simulate", std::move(body), {"image.npy", "coils.npy", "mask.npy", "kspace.npy"});
}

void cmd_reconstruct(const Config& c, const fs::path& out) {
  prepare_out(out);
  const Scene scene = resolve_scene(c);
  std::optional<FidelityWeights> weights;
  if (!c.sampler.weights_file.empty())
    weights = read_weights(c.sampler.weights_file, build_sequence(c).size());
  const auto prior = make_prior(c);
  const ReconstructResult r = run_reconstruct(c, scene, *prior, weights);

  std::vector<std::string> files{"recon.npy", "recon.pgm", "metrics.csv"};
  npy::write_image(out / "recon.npy", r.x0);
  pgm::write_magnitude(out / "recon.pgm", r.x0);
  std::string csv = "method,psnr,ssim,holdout_loss,nfe\n";
  csv += c.method + "," + (r.metrics ? format_metric(r.metrics->psnr) : "nan") + "," +
         (r.metrics ? csv_number(r.metrics->ssim) : "nan") + "," + csv_number(r.holdout_loss) + "," +
         std::to_string(r.nfe) + "\n";
  write_text(out / "metrics.csv", csv);

  json body = config_body(c);
  body["resolved"] = resolved_common(c, scene);
  const SsduSplit sp = make_split(c, scene.mask);
  body["resolved"]["split"] = {{"theta", sp.theta.lines()}, {"lambda", sp.lambda.lines()}};
  body["resolved"]["nfe"] = r.nfe;
  if (r.weights) {
    body["resolved"]["zeta"] = r.weights->zetas();
    if (r.tuning) {
      write_weights(out / "weights.json", *r.weights, build_sequence(c));
      files.push_back("weights.json");
    }
  }
  if (c.sampler.export_trajectory && !r.trajectory.records.empty())
    write_trajectory(out / "trajectory", r.trajectory);
  write_manifest(out, "reconstruct", std::move(body), files);
  log::info("reconstruct {}: holdout loss {:.6f}, {} score evaluations", c.method, r.holdout_loss, r.nfe);
}

void cmd_tune(const Config& c, const fs::path& out) {
  prepare_out(out);
  const Scene scene = resolve_scene(c);
  const auto prior = make_prior(c);
  const EncodingOperator op(scene.sens, scene.mask);
  const SsduSplit sp = make_split(c, scene.mask);
  const ZadsProblem problem = ZadsProblem::make(*prior, op, scene.y, sp);
  SamplerConfig scfg = build_sampler_config(c);
  if (scfg.noise_mode != NoiseMode::kReplayBank) throw ConfigError("tuning requires sampler.noise_mode = replay_bank");
  const TuneReport report = tune(problem, build_tuner_config(c), scfg);

  const int steps = scfg.seq.size();
  std::string csv = "epoch,loss,grad_norm";
  for (int i = 0; i < steps; ++i) csv += fmt::format(",zeta_{}", i + 1);
  csv += "\n";
  for (const auto& e : report.epochs) {
    csv += std::to_string(e.epoch) + "," + csv_number(e.loss) + "," + csv_number(e.grad_norm);
    for (double z : e.zeta) csv += "," + csv_number(z);
    csv += "\n";
  }
  write_text(out / "tune.csv", csv);
  write_weights(out / "weights.json", report.final_weights, scfg.seq);
  npy::write_image(out / "recon.npy", report.x0);

  json body = config_body(c);
  body["resolved"] = resolved_common(c, scene);
  body["resolved"]["split"] = {{"theta", sp.theta.lines()}, {"lambda", sp.lambda.lines()}};
  body["resolved"]["zeta"] = report.final_weights.zetas();
  body["resolved"]["final_loss"] = report.final_loss;
  body["resolved"]["tuning_nfe"] = report.tuning_nfe;
  body["resolved"]["total_nfe"] = report.total_nfe;
  write_manifest(out, "tune", std::move(body), {"tune.csv", "weights.json", "recon.npy"});
}

void cmd_sweep(const Config& c, const fs::path& out) {
  prepare_out(out);
  const Scene scene = resolve_scene(c);
  const auto prior = make_prior(c);
  const auto rows = run_sweep(c, scene, *prior);
  std::string csv = "zeta,psnr,ssim,holdout_loss\n";
  for (const auto& r : rows)
    csv += csv_number(r.zeta) + "," + format_metric(r.psnr) + "," + csv_number(r.ssim) + "," +
           csv_number(r.holdout_loss) + "\n";
  write_text(out / "sweep.csv", csv);
  json body = config_body(c);
  body["resolved"] = resolved_common(c, scene);
  write_manifest(out, "sweep", std::move(body), {"sweep.csv"});
}

MetricPair cmd_eval(const fs::path& ref, const fs::path& test, const std::optional<fs::path>& out) {
  const ComplexImage a = npy::read_image(ref);
  const ComplexImage b = npy::read_image(test);
  if (!a.same_shape(b)) throw DimensionMismatch("eval: reference and test shapes differ");
  const MetricPair m = evaluate(a, b);
  const std::string row = format_metric(m.psnr) + "," + csv_number(m.ssim);
  std::cout << "psnr,ssim\n" << row << "\n";
  if (out) {
    prepare_out(*out);
    write_text(*out / "eval.csv", "psnr,ssim\n" + row + "\n");
    json body{{"inputs", {{"reference", ref.string()}, {"test", test.string()}}}};
    write_manifest(*out, "eval", std::move(body), {"eval.csv"});
  }
  return m;
}

}  // namespace zads::app
