#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "zads/app.hpp"
#include "zads/npy.hpp"

namespace {

namespace fs = std::filesystem;
using namespace zads;
using nlohmann::json;

json small_config() {
  return json{{"seed", 3},
              {"image", {{"height", 32}, {"width", 32}}},
              {"acquisition", {{"coils", 2}, {"acs", 4}}},
              {"schedule", {{"bands", {{0.1, 3}, {0.5, 2}, {1.0, 1}}}}},
              {"tuner", {{"epochs", 2}}},
              {"sweep_grid", {3.0, 0.3}}};
}

fs::path write_config(const fs::path& dir, const json& j, const std::string& name = "config.json") {
  std::ofstream(dir / name) << j.dump(2);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

TEST(Cli, UsageErrorsExitTwo) {
  const auto dir = fixture::temp_dir("cli_usage");
  EXPECT_EQ(fixture::run_cli(""), 2);
  EXPECT_EQ(fixture::run_cli("frobnicate"), 2);
  EXPECT_EQ(fixture::run_cli("simulate --bogus"), 2);
  EXPECT_EQ(fixture::run_cli("simulate"), 2);  // no --out
  EXPECT_EQ(fixture::run_cli("--config " + q(dir / "absent.json") + " simulate --out " + q(dir / "o")), 2);
  json bad = small_config();
  bad["sampler"] = {{"eta", 3.0}};
  EXPECT_EQ(fixture::run_cli("--config " + q(write_config(dir, bad)) + " simulate --out " + q(dir / "o")), 2);
  EXPECT_EQ(fixture::run_cli("reconstruct --method sense --out " + q(dir / "o")), 2);
  EXPECT_EQ(fixture::run_cli("--help"), 0);
}

TEST(Cli, IoErrorsExitFour) {
  const auto dir = fixture::temp_dir("cli_io");
  json c = small_config();
  c["inputs"] = (dir / "nowhere").string();
  EXPECT_EQ(fixture::run_cli("--config " + q(write_config(dir, c)) + " reconstruct --out " + q(dir / "o")), 4);
  EXPECT_EQ(fixture::run_cli("eval " + q(dir / "a.npy") + " " + q(dir / "b.npy")), 4);
}

TEST(Cli, SimulateWritesScene) {
  const auto dir = fixture::temp_dir("cli_simulate");
  ASSERT_EQ(fixture::run_cli("--config " + q(write_config(dir, small_config())) + " simulate --out " +
                             q(dir / "sim")),
            0);
  EXPECT_EQ(npy::read(dir / "sim" / "image.npy").shape, (std::vector<std::size_t>{32, 32}));
  EXPECT_EQ(npy::read(dir / "sim" / "coils.npy").shape, (std::vector<std::size_t>{2, 32, 32}));
  EXPECT_EQ(npy::read(dir / "sim" / "kspace.npy").shape, (std::vector<std::size_t>{2, 32, 32}));
  EXPECT_EQ(npy::read(dir / "sim" / "mask.npy").shape, (std::vector<std::size_t>{32}));
  const json m = json::parse(slurp(dir / "sim" / "manifest.json"));
  EXPECT_EQ(m["verb"], "simulate");
  EXPECT_EQ(m["outputs"]["kspace.npy"], app::sha256_file(dir / "sim" / "kspace.npy"));

  json wide = small_config();
  wide["image"] = {{"height", 16}, {"width", 320}};
  wide["acquisition"] = {{"coils", 1}, {"acs", 24}};
  ASSERT_EQ(fixture::run_cli("--config " + q(write_config(dir, wide, "wide.json")) + " simulate --out " +
                             q(dir / "wide")),
            0);
  const auto flags = npy::to_real(npy::read(dir / "wide" / "mask.npy"));
  EXPECT_EQ(std::count(flags.begin(), flags.end(), 1.0), 98);
}

TEST(Cli, ReplayReproducesEveryVerb) {
  const auto dir = fixture::temp_dir("cli_replay");
  const auto cfg = write_config(dir, small_config());
  ASSERT_EQ(fixture::run_cli("--config " + q(cfg) + " simulate --out " + q(dir / "sim")), 0);
  json c = small_config();
  c["inputs"] = (dir / "sim").string();
  const auto cfg2 = write_config(dir, c, "inputs.json");
  ASSERT_EQ(fixture::run_cli("--config " + q(cfg2) + " reconstruct --out " + q(dir / "rec")), 0);
  ASSERT_EQ(fixture::run_cli("--config " + q(cfg2) + " tune --out " + q(dir / "tune")), 0);
  ASSERT_EQ(fixture::run_cli("--config " + q(cfg2) + " sweep --out " + q(dir / "sweep")), 0);
  ASSERT_EQ(fixture::run_cli("eval " + q(dir / "sim" / "image.npy") + " " + q(dir / "rec" / "recon.npy") +
                             " --out " + q(dir / "eval")),
            0);
  for (const std::string verb : {"sim", "rec", "tune", "sweep", "eval"}) {
    const std::string name = verb == "sim" ? "simulate" : verb == "rec" ? "reconstruct" : verb;
    ASSERT_EQ(fixture::run_cli("--replay " + q(dir / verb / "manifest.json") + " " + name + " --out " +
                               q(dir / (verb + "_replay"))),
              0)
        << verb;
    EXPECT_EQ(slurp(dir / verb / "manifest.json"), slurp(dir / (verb + "_replay") / "manifest.json")) << verb;
  }
  EXPECT_EQ(fixture::run_cli("--replay " + q(dir / "rec" / "manifest.json") + " tune --out " + q(dir / "x")), 2);
}

TEST(Cli, MethodsMatchTheLibrary) {
  const auto dir = fixture::temp_dir("cli_methods");
  ASSERT_EQ(fixture::run_cli("--config " + q(write_config(dir, small_config())) + " simulate --out " +
                             q(dir / "sim")),
            0);
  json c = small_config();
  c["inputs"] = (dir / "sim").string();
  const auto cfg = write_config(dir, c, "inputs.json");
  const app::Config config = app::load_config(cfg);
  const app::Scene scene = app::resolve_scene(config);
  const EncodingOperator op(scene.sens, scene.mask);

  ASSERT_EQ(fixture::run_cli("--config " + q(cfg) + " reconstruct --method zf --out " + q(dir / "zf")), 0);
  EXPECT_LT(oracle::max_abs_diff(npy::read_image(dir / "zf" / "recon.npy"), op.adjoint(scene.y)), 1e-5);

  ASSERT_EQ(fixture::run_cli("--config " + q(cfg) + " reconstruct --method dds --out " + q(dir / "dds")), 0);
  const auto prior = app::make_prior(config);
  const auto dds = dds_reconstruct(*prior, op, scene.y, config.sampler.zeta, app::build_sampler_config(config));
  EXPECT_LT(oracle::max_abs_diff(npy::read_image(dir / "dds" / "recon.npy"), dds.x0), 1e-5);

  ASSERT_EQ(fixture::run_cli("--config " + q(cfg) + " reconstruct --out " + q(dir / "zads")), 0);
  EXPECT_TRUE(fs::exists(dir / "zads" / "weights.json"));
  const auto w = app::read_weights(dir / "zads" / "weights.json", 6);
  c["sampler"] = {{"weights_file", (dir / "zads" / "weights.json").string()}};
  ASSERT_EQ(fixture::run_cli("--config " + q(write_config(dir, c, "w.json")) + " reconstruct --out " +
                             q(dir / "zads_w")),
            0);
  EXPECT_EQ(slurp(dir / "zads" / "recon.npy"), slurp(dir / "zads_w" / "recon.npy"));
  EXPECT_FALSE(fs::exists(dir / "zads_w" / "weights.json"));
  (void)w;
}

TEST(Cli, SweepRowsAscendAndMatchReconstruct) {
  const auto dir = fixture::temp_dir("cli_sweep");
  json c = small_config();
  c["sweep_grid"] = {1.0};
  c["method"] = "dds";
  const auto cfg = write_config(dir, c);
  ASSERT_EQ(fixture::run_cli("--config " + q(cfg) + " sweep --out " + q(dir / "sweep")), 0);
  ASSERT_EQ(fixture::run_cli("--config " + q(cfg) + " reconstruct --out " + q(dir / "rec")), 0);
  std::istringstream sweep(slurp(dir / "sweep" / "sweep.csv"));
  std::istringstream rec(slurp(dir / "rec" / "metrics.csv"));
  std::string header, srow, rrow;
  std::getline(sweep, header);
  std::getline(sweep, srow);
  std::getline(rec, header);
  std::getline(rec, rrow);
  // zeta,psnr,ssim,holdout vs method,psnr,ssim,holdout,nfe
  EXPECT_EQ(srow.substr(srow.find(',')), rrow.substr(rrow.find(','), rrow.rfind(',') - rrow.find(',')));

  c["sweep_grid"] = {10.0, 0.1, 1.0};
  ASSERT_EQ(fixture::run_cli("--config " + q(write_config(dir, c, "grid.json")) + " sweep --out " +
                             q(dir / "grid")),
            0);
  std::istringstream grid(slurp(dir / "grid" / "sweep.csv"));
  std::getline(grid, header);
  std::vector<double> zetas;
  for (std::string line; std::getline(grid, line);) zetas.push_back(std::stod(line));
  EXPECT_EQ(zetas, (std::vector<double>{0.1, 1.0, 10.0}));
}

TEST(Cli, EvalAgainstItself) {
  const auto dir = fixture::temp_dir("cli_eval");
  ASSERT_EQ(fixture::run_cli("--config " + q(write_config(dir, small_config())) + " simulate --out " +
                             q(dir / "sim")),
            0);
  ASSERT_EQ(fixture::run_cli("eval " + q(dir / "sim" / "image.npy") + " " + q(dir / "sim" / "image.npy") +
                             " --out " + q(dir / "eval")),
            0);
  EXPECT_EQ(slurp(dir / "eval" / "eval.csv"), "psnr,ssim\ninf,1\n");
}

TEST(Cli, PluginPriorOverride) {
  const auto dir = fixture::temp_dir("cli_plugin");
  json c = small_config();
  c["method"] = "dds";
  c["image"]["source"] = "phantom";
  const auto cfg = write_config(dir, c);
  ASSERT_EQ(fixture::run_cli("--config " + q(cfg) + " --plugin '" FAKE_PLUGIN_PATH " zero' reconstruct --out " +
                             q(dir / "plugin")),
            0);
  c["prior"] = {{"kind", "zero"}};
  ASSERT_EQ(fixture::run_cli("--config " + q(write_config(dir, c, "zero.json")) + " reconstruct --out " +
                             q(dir / "zero")),
            0);
  EXPECT_LT(oracle::max_abs_diff(npy::read_image(dir / "plugin" / "recon.npy"),
                                 npy::read_image(dir / "zero" / "recon.npy")),
            1e-4);
  EXPECT_EQ(fixture::run_cli("--config " + q(cfg) + " --plugin '" FAKE_PLUGIN_PATH " truncate' reconstruct --out " +
                             q(dir / "broken")),
            4);
}

}  // namespace
