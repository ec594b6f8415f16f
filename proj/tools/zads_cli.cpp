#include <omp.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "zads/app.hpp"
#include "zads/errors.hpp"
#include "zads/logging.hpp"

namespace fs = std::filesystem;
using namespace zads;

namespace {

nlohmann::json read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw app::ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"ZADS: self-supervised tuning of diffusion data-fidelity weights for undersampled MRI"};
  cli.require_subcommand(1);
  cli.fallthrough();

  std::string config_path;
  std::string replay_path;
  std::string plugin_cmd;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  cli.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cli.add_option("--seed", seed, "Override the configured seed");
  cli.add_option("--jobs", jobs, "Worker threads (default: OpenMP default)")->check(CLI::PositiveNumber);
  cli.add_option("--replay", replay_path, "Re-run the command recorded in a manifest")->check(CLI::ExistingFile);
  cli.add_option("--plugin", plugin_cmd, "External denoiser command line (replaces the configured prior)");
  cli.add_option("--out", out_dir, "Output directory");

  auto* simulate = cli.add_subcommand("simulate", "Write phantom, coil maps, mask and noisy k-space");
  auto* reconstruct = cli.add_subcommand("reconstruct", "Reconstruct with method zf|dps|dds|zads");
  auto* tune = cli.add_subcommand("tune", "Tune the per-step fidelity weights");
  auto* sweep = cli.add_subcommand("sweep", "Fixed-zeta DDS grid");
  auto* eval = cli.add_subcommand("eval", "PSNR/SSIM of a reconstruction against a reference");
  std::string method;
  reconstruct->add_option("--method", method, "Override the configured method")
      ->check(CLI::IsMember({"zf", "dps", "dds", "zads"}));
  std::string ref_path;
  std::string test_path;
  eval->add_option("reference", ref_path, "Reference image (NPY)");
  eval->add_option("test", test_path, "Reconstructed image (NPY)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : app::kConfigFailure;
  }

  try {
    if (jobs > 0) omp_set_num_threads(jobs);
    const std::string verb = cli.get_subcommands().front()->get_name();

    std::optional<nlohmann::json> manifest;
    if (!replay_path.empty()) {
      if (!config_path.empty()) throw app::ConfigError("--replay and --config are mutually exclusive");
      manifest = read_manifest(replay_path);
      if (manifest->value("verb", "") != verb)
        throw app::ConfigError("manifest records verb '" + manifest->value("verb", "") + "', not '" + verb + "'");
    }

    if (eval->parsed()) {
      if (manifest) {
        ref_path = manifest->at("inputs").at("reference").get<std::string>();
        test_path = manifest->at("inputs").at("test").get<std::string>();
      }
      if (ref_path.empty() || test_path.empty()) throw app::ConfigError("eval needs REFERENCE and TEST paths");
      std::optional<fs::path> out;
      if (!out_dir.empty()) out = out_dir;
      app::cmd_eval(ref_path, test_path, out);
      return app::kOk;
    }

    if (out_dir.empty()) throw app::ConfigError("--out is required");
    app::Config config;
    if (manifest) {
      if (!manifest->contains("config")) throw app::ConfigError("manifest has no config section");
      config = app::parse_config(manifest->at("config"));
    } else if (!config_path.empty()) {
      config = app::load_config(config_path);
    }
    if (seed) config.seed = *seed;
    if (!plugin_cmd.empty()) {
      config.prior.kind = "plugin";
      config.prior.plugin = plugin_cmd;
    }
    if (!method.empty()) config.method = method;
    config = app::parse_config(app::to_json(config));  // revalidate overrides

    if (simulate->parsed()) app::cmd_simulate(config, out_dir);
    else if (reconstruct->parsed()) app::cmd_reconstruct(config, out_dir);
    else if (tune->parsed()) app::cmd_tune(config, out_dir);
    else if (sweep->parsed()) app::cmd_sweep(config, out_dir);
    return app::kOk;
  } catch (const nlohmann::json::exception& e) {
    log::error("{}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return app::kConfigFailure;
  } catch (const std::exception& e) {
    log::error("{}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return app::exit_code_for(e);
  }
}
