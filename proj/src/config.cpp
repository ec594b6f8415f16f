#include "zads/config.hpp"

#include <fstream>
#include <set>

#include "zads/rng.hpp"

namespace zads::app {

using nlohmann::json;

namespace {

// Reads fields of one JSON object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key " + path_ + "." + key);
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key " + path_ + "." + key + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string name(const char* key) const { return path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid config: " + what);
}

void require_one_of(const std::string& v, std::initializer_list<const char*> allowed,
                    const std::string& key) {
  for (const char* a : allowed)
    if (v == a) return;
  throw ConfigError("invalid value '" + v + "' for " + key);
}

}  // namespace

Seeds derive_seeds(std::uint64_t seed) {
  return Seeds{seed, seed + 1, seed + 2, seed + 3, seed + 4};
}

Config parse_config(const json& j) {
  Config c;
  {
    Reader r(j, "");
    r.get("schema_version", c.schema_version);
    if (c.schema_version != kSchemaVersion)
      throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
    r.get("seed", c.seed);
    r.get("method", c.method);
    r.get("inputs", c.inputs);
    r.get("sweep_grid", c.sweep_grid);

    if (const json* s = r.child("image")) {
      Reader q(*s, "image");
      q.get("height", c.image.height);
      q.get("width", c.image.width);
      q.get("source", c.image.source);
    }
    if (const json* s = r.child("prior")) {
      Reader q(*s, "prior");
      q.get("kind", c.prior.kind);
      q.get("mean", c.prior.mean);
      q.get("mean_seed", c.prior.mean_seed);
      q.get("pixel_variance", c.prior.pixel_variance);
      q.get("corner", c.prior.corner);
      q.get("exponent", c.prior.exponent);
      q.get("plugin", c.prior.plugin);
      q.get("plugin_timeout_s", c.prior.plugin_timeout_s);
    }
    if (const json* s = r.child("acquisition")) {
      Reader q(*s, "acquisition");
      q.get("coils", c.acquisition.coils);
      q.get("acceleration", c.acquisition.acceleration);
      q.get("acs", c.acquisition.acs);
      q.get("noise_std", c.acquisition.noise_std);
    }
    if (const json* s = r.child("schedule")) {
      Reader q(*s, "schedule");
      q.get("T", c.schedule.T);
      q.get("beta_start", c.schedule.beta_start);
      q.get("beta_end", c.schedule.beta_end);
      q.get("sequence", c.schedule.sequence);
      q.get("steps", c.schedule.steps);
      if (const json* b = q.child("bands")) {
        if (!b->is_array()) throw ConfigError("schedule.bands must be an array");
        c.schedule.bands.clear();
        for (const auto& band : *b) {
          if (!band.is_array() || band.size() != 2 || !band[0].is_number() || !band[1].is_number_integer())
            throw ConfigError("schedule.bands entries must be [upper_fraction, steps]");
          c.schedule.bands.push_back({band[0].get<double>(), band[1].get<int>()});
        }
      }
    }
    if (const json* s = r.child("sampler")) {
      Reader q(*s, "sampler");
      q.get("eta", c.sampler.eta);
      q.get("cg_iters", c.sampler.cg_iters);
      q.get("cg_tol", c.sampler.cg_tol);
      q.get("noise_mode", c.sampler.noise_mode);
      q.get("zeta", c.sampler.zeta);
      q.get("weights_file", c.sampler.weights_file);
      q.get("zads_data", c.sampler.zads_data);
      q.get("export_trajectory", c.sampler.export_trajectory);
    }
    if (const json* s = r.child("ssdu")) {
      Reader q(*s, "ssdu");
      q.get("rho", c.ssdu.rho);
      q.get("redraw_per_epoch", c.ssdu.redraw_per_epoch);
    }
    if (const json* s = r.child("tuner")) {
      Reader q(*s, "tuner");
      q.get("epochs", c.tuner.epochs);
      q.get("learning_rate", c.tuner.learning_rate);
      q.get("grad_mode", c.tuner.grad_mode);
      q.get("fd_step", c.tuner.fd_step);
      q.get("optimizer", c.tuner.optimizer);
      q.get("adam_beta1", c.tuner.adam_beta1);
      q.get("adam_beta2", c.tuner.adam_beta2);
      q.get("adam_epsilon", c.tuner.adam_epsilon);
      q.get("init_zeta", c.tuner.init_zeta);
      q.get("redraw_noise_per_epoch", c.tuner.redraw_noise_per_epoch);
    }
  }

  require_one_of(c.method, {"zf", "dps", "dds", "zads"}, "method");
  require_one_of(c.image.source, {"phantom", "gaussian_prior"}, "image.source");
  require_one_of(c.prior.kind, {"gaussian", "zero", "plugin"}, "prior.kind");
  require_one_of(c.prior.mean, {"phantom", "zero"}, "prior.mean");
  require_one_of(c.schedule.sequence, {"banded", "uniform"}, "schedule.sequence");
  require_one_of(c.sampler.zads_data, {"omega", "theta"}, "sampler.zads_data");
  require_one_of(c.sampler.noise_mode, {"replay_bank", "fresh"}, "sampler.noise_mode");
  require_one_of(c.tuner.grad_mode, {"replay_analytic", "finite_difference"}, "tuner.grad_mode");
  require_one_of(c.tuner.optimizer, {"gd", "adam"}, "tuner.optimizer");

  require(c.image.height >= 16 && c.image.width >= 16, "image dimensions must be >= 16");
  require(c.image.height <= 4096 && c.image.width <= 4096, "image dimensions must be <= 4096");
  require(c.prior.pixel_variance > 0.0 && c.prior.corner > 0.0 && c.prior.exponent >= 0.0,
          "prior spectrum parameters must be positive");
  require(c.prior.kind != "plugin" || !c.prior.plugin.empty(), "prior.kind = plugin needs prior.plugin");
  require(c.prior.plugin_timeout_s > 0.0, "prior.plugin_timeout_s must be > 0");
  require(c.image.source != "gaussian_prior" || c.prior.kind == "gaussian" || c.prior.kind == "plugin",
          "image.source = gaussian_prior needs a gaussian prior definition");
  require(c.acquisition.coils >= 1, "acquisition.coils must be >= 1");
  require(c.acquisition.noise_std >= 0.0, "acquisition.noise_std must be >= 0");
  require(c.sampler.eta >= 0.0 && c.sampler.eta <= 1.0, "sampler.eta must lie in [0, 1]");
  require(c.sampler.cg_iters >= 1, "sampler.cg_iters must be >= 1");
  require(c.sampler.cg_tol >= 0.0, "sampler.cg_tol must be >= 0");
  require(c.sampler.zeta >= 0.0, "sampler.zeta must be >= 0");
  require(c.ssdu.rho > 0.0 && c.ssdu.rho < 1.0, "ssdu.rho must lie in (0, 1)");
  require(c.tuner.epochs >= 1, "tuner.epochs must be >= 1");
  require(c.tuner.learning_rate >= 0.0, "tuner.learning_rate must be >= 0");
  require(c.tuner.fd_step > 0.0, "tuner.fd_step must be > 0");
  require(c.tuner.init_zeta > 0.0, "tuner.init_zeta must be > 0");
  require(!c.sweep_grid.empty(), "sweep_grid must not be empty");
  for (double z : c.sweep_grid) require(z > 0.0, "sweep_grid values must be > 0");
  require(c.sampler.weights_file.empty() || c.method == "zads",
          "sampler.weights_file is only valid with method zads");
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const Config& c) {
  json bands = json::array();
  for (const auto& b : c.schedule.bands) bands.push_back({b.upper_fraction, b.steps});
  return json{
      {"schema_version", c.schema_version},
      {"seed", c.seed},
      {"method", c.method},
      {"inputs", c.inputs},
      {"sweep_grid", c.sweep_grid},
      {"image", {{"height", c.image.height}, {"width", c.image.width}, {"source", c.image.source}}},
      {"prior",
       {{"kind", c.prior.kind},
        {"mean", c.prior.mean},
        {"mean_seed", c.prior.mean_seed},
        {"pixel_variance", c.prior.pixel_variance},
        {"corner", c.prior.corner},
        {"exponent", c.prior.exponent},
        {"plugin", c.prior.plugin},
        {"plugin_timeout_s", c.prior.plugin_timeout_s}}},
      {"acquisition",
       {{"coils", c.acquisition.coils},
        {"acceleration", c.acquisition.acceleration},
        {"acs", c.acquisition.acs},
        {"noise_std", c.acquisition.noise_std}}},
      {"schedule",
       {{"T", c.schedule.T},
        {"beta_start", c.schedule.beta_start},
        {"beta_end", c.schedule.beta_end},
        {"sequence", c.schedule.sequence},
        {"steps", c.schedule.steps},
        {"bands", bands}}},
      {"sampler",
       {{"eta", c.sampler.eta},
        {"cg_iters", c.sampler.cg_iters},
        {"cg_tol", c.sampler.cg_tol},
        {"noise_mode", c.sampler.noise_mode},
        {"zeta", c.sampler.zeta},
        {"weights_file", c.sampler.weights_file},
        {"zads_data", c.sampler.zads_data},
        {"export_trajectory", c.sampler.export_trajectory}}},
      {"ssdu", {{"rho", c.ssdu.rho}, {"redraw_per_epoch", c.ssdu.redraw_per_epoch}}},
      {"tuner",
       {{"epochs", c.tuner.epochs},
        {"learning_rate", c.tuner.learning_rate},
        {"grad_mode", c.tuner.grad_mode},
        {"fd_step", c.tuner.fd_step},
        {"optimizer", c.tuner.optimizer},
        {"adam_beta1", c.tuner.adam_beta1},
        {"adam_beta2", c.tuner.adam_beta2},
        {"adam_epsilon", c.tuner.adam_epsilon},
        {"init_zeta", c.tuner.init_zeta},
        {"redraw_noise_per_epoch", c.tuner.redraw_noise_per_epoch}}},
  };
}

NoiseSchedule build_schedule(const Config& c) {
  return make_linear_schedule(c.schedule.T, c.schedule.beta_start, c.schedule.beta_end);
}

StepSequence build_sequence(const Config& c) {
  if (c.schedule.sequence == "uniform") return make_uniform_sequence(c.schedule.T, c.schedule.steps);
  return make_banded_sequence(c.schedule.T, c.schedule.bands);
}

SamplerConfig build_sampler_config(const Config& c) {
  SamplerConfig s;
  s.schedule = build_schedule(c);
  s.seq = build_sequence(c);
  s.eta = c.sampler.eta;
  s.cg = CgConfig{c.sampler.cg_iters, c.sampler.cg_tol};
  s.seed = derive_seeds(c.seed).sampler;
  s.noise_mode = c.sampler.noise_mode == "fresh" ? NoiseMode::kFresh : NoiseMode::kReplayBank;
  s.keep_trajectory = c.sampler.export_trajectory;
  return s;
}

TunerConfig build_tuner_config(const Config& c) {
  TunerConfig t;
  t.epochs = c.tuner.epochs;
  t.learning_rate = c.tuner.learning_rate;
  t.grad_mode = c.tuner.grad_mode == "finite_difference" ? GradientMode::kFiniteDifference
                                                         : GradientMode::kReplayAnalytic;
  t.fd_step = c.tuner.fd_step;
  t.optimizer = c.tuner.optimizer == "adam" ? OptimizerKind::kAdam : OptimizerKind::kGradientDescent;
  t.adam_beta1 = c.tuner.adam_beta1;
  t.adam_beta2 = c.tuner.adam_beta2;
  t.adam_epsilon = c.tuner.adam_epsilon;
  t.init_zeta = c.tuner.init_zeta;
  t.redraw_noise_per_epoch = c.tuner.redraw_noise_per_epoch;
  t.redraw_split_per_epoch = c.ssdu.redraw_per_epoch;
  return t;
}

}  // namespace zads::app
