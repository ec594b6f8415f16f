#include <gtest/gtest.h>

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "oracles.hpp"
#include "zads/errors.hpp"
#include "zads/plugin.hpp"
#include "zads/samplers.hpp"

namespace {

using namespace zads;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

const fs::path kFrames = fs::path(ZADS_TEST_DATA) / "plugin";

std::vector<std::uint8_t> golden(const std::string& name) {
  std::ifstream in(kFrames / name, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ComplexImage golden_image() { return ComplexImage(2, 2, {{1, 2}, {-0.5, 0}, {0.25, -4}, {3, 0.125}}); }

std::string fake(const std::string& mode) { return std::string(FAKE_PLUGIN_PATH) + " " + mode; }

TEST(Frames, EncodingMatchesGoldenBytes) {
  EXPECT_EQ(plugin::encode_handshake(2, 2), golden("handshake_2x2.bin"));
  EXPECT_EQ(plugin::encode_handshake(64, 48), golden("handshake_64x48.bin"));
  EXPECT_EQ(plugin::encode_request(17, 0.5, golden_image()), golden("request_t17_2x2.bin"));
  EXPECT_EQ(plugin::encode_response(golden_image()), golden("response_2x2.bin"));
  EXPECT_EQ(plugin::encode_error("unknown opcode 7"), golden("error_opcode.bin"));
}

TEST(Frames, DecodesGoldenResponses) {
  EXPECT_EQ(plugin::decode_response(golden("response_2x2.bin"), 2, 2), golden_image());
  EXPECT_EQ(plugin::decode_response(golden("response_zero_2x2.bin"), 2, 2), ComplexImage(2, 2));
}

TEST(Frames, CorruptFramesReportOffsets) {
  try {
    plugin::decode_response(golden("response_truncated_2x2.bin"), 2, 2);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.frame_offset(), 28);
  }
  try {
    plugin::decode_response(golden("response_long_2x2.bin"), 2, 2);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.frame_offset(), 33);
  }
  try {
    plugin::decode_response(golden("response_bad_opcode.bin"), 2, 2);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("opcode"), std::string::npos);
    EXPECT_EQ(e.frame_offset(), 0);
  }
  try {
    plugin::decode_response(golden("error_opcode.bin"), 2, 2);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown opcode 7"), std::string::npos);
  }
  EXPECT_THROW(plugin::decode_response({}, 2, 2), ProtocolError);
}

TEST(Client, HandshakeBytesOnTheWire) {
  int to[2], from[2];
  ASSERT_EQ(pipe(to), 0);
  ASSERT_EQ(pipe(from), 0);
  {
    plugin::PluginClient client(to[1], from[0], -1, 2, 2, 1000ms);
    std::vector<std::uint8_t> got(16);
    ASSERT_EQ(read(to[0], got.data(), 16), 16);
    EXPECT_EQ(got, golden("handshake_2x2.bin"));
    // answer a request with the golden response before it is sent
    const auto resp = golden("response_2x2.bin");
    ASSERT_EQ(write(from[1], resp.data(), resp.size()), static_cast<ssize_t>(resp.size()));
    EXPECT_EQ(client.predict_noise(golden_image(), 17, 0.5), golden_image());
    std::vector<std::uint8_t> req(golden("request_t17_2x2.bin").size());
    ASSERT_EQ(read(to[0], req.data(), req.size()), static_cast<ssize_t>(req.size()));
    EXPECT_EQ(req, golden("request_t17_2x2.bin"));
  }
  close(to[0]);
  close(from[1]);
}

TEST(Client, ZeroModeMatchesBuiltInStubTrajectory) {
  const int h = 8, w = 8;
  SamplerConfig cfg;
  cfg.seq = make_uniform_sequence(1000, 10);
  cfg.seed = 5;
  plugin::PluginPrior external(plugin::PluginClient::spawn(fake("zero"), h, w, 5000ms));
  const auto a = ddim_reconstruct(external, h, w, cfg);
  const auto b = ddim_reconstruct(ZeroScorePrior{}, h, w, cfg);
  for (std::size_t i = 0; i < a.trajectory.records.size(); ++i)
    EXPECT_LE(oracle::max_abs_diff(a.trajectory.records[i].x_t, b.trajectory.records[i].x_t), 1e-6);
  EXPECT_LE(oracle::max_abs_diff(a.x0, b.x0), 1e-6);
}

TEST(Client, EchoModeRoundTripsFloatPayload) {
  auto client = plugin::PluginClient::spawn(fake("echo"), 16, 12, 5000ms);
  ComplexImage x = oracle::random_image(16, 12, 3);
  for (auto& v : x.values()) v = Complex(static_cast<float>(v.real()), static_cast<float>(v.imag()));
  for (int k = 0; k < 50; ++k) EXPECT_EQ(plugin::external_predict_noise(*client, x, k, 0.5), x);
  EXPECT_EQ(client->requests(), 50);
}

TEST(Client, Failures) {
  const ComplexImage x = oracle::random_image(4, 4, 4);
  EXPECT_THROW(plugin::PluginClient::spawn(fake("slow"), 4, 4, 200ms)->predict_noise(x, 1, 0.5), PluginTimeout);
  EXPECT_THROW(plugin::PluginClient::spawn(fake("truncate"), 4, 4, 5000ms)->predict_noise(x, 1, 0.5), ProtocolError);
  EXPECT_THROW(plugin::PluginClient::spawn(fake("exit"), 4, 4, 5000ms)->predict_noise(x, 1, 0.5), TransportError);
  EXPECT_THROW(plugin::PluginClient::spawn("exit 0", 4, 4, 5000ms)->predict_noise(x, 1, 0.5), TransportError);
  try {
    plugin::PluginClient::spawn(fake("badop"), 4, 4, 5000ms)->predict_noise(x, 1, 0.5);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("opcode"), std::string::npos);
  }
  try {
    plugin::PluginClient::spawn(fake("error"), 4, 4, 5000ms)->predict_noise(x, 1, 0.5);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("denoiser failed"), std::string::npos);
  }
  auto client = plugin::PluginClient::spawn(fake("zero"), 4, 4, 5000ms);
  EXPECT_THROW(client->predict_noise(ComplexImage(4, 5), 1, 0.5), DimensionMismatch);
}

TEST(Client, StreamIsUnusableAfterAFailure) {
  auto client = plugin::PluginClient::spawn(fake("truncate"), 4, 4, 5000ms);
  const ComplexImage x(4, 4);
  EXPECT_THROW(client->predict_noise(x, 1, 0.5), ProtocolError);
  EXPECT_THROW(client->predict_noise(x, 1, 0.5), TransportError);
}

}  // namespace
