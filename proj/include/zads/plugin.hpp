#pragma once

// Client side of the external denoiser protocol. The plug-in is a child
// process speaking little-endian frames over stdin/stdout:
//
//   handshake  "ZADP" | version u32 = 1 | H u32 | W u32
//   request    opcode u8 = 1 | t u32 | alpha_bar f64 | 2*H*W f32 (re, im interleaved)
//   response   opcode u8 = 2 | 2*H*W f32
//   error      opcode u8 = 255 | len u32 | len bytes utf-8
//
// The handshake is not acknowledged; a rejected handshake surfaces as an error
// frame on the first request. One request is in flight at a time.

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <sys/types.h>
#include <vector>

#include "zads/priors.hpp"

namespace zads::plugin {

inline constexpr std::uint32_t kProtocolVersion = 1;
inline constexpr std::uint8_t kOpRequest = 1;
inline constexpr std::uint8_t kOpResponse = 2;
inline constexpr std::uint8_t kOpError = 255;
inline constexpr std::chrono::milliseconds kDefaultDeadline{30000};

std::vector<std::uint8_t> encode_handshake(std::uint32_t height, std::uint32_t width,
                                           std::uint32_t version = kProtocolVersion);
std::vector<std::uint8_t> encode_request(std::uint32_t t, double alpha_bar, const ComplexImage& x);
std::vector<std::uint8_t> encode_response(const ComplexImage& eps);
std::vector<std::uint8_t> encode_error(const std::string& message);

/// Parses one complete response frame held in `frame`. Throws ProtocolError
/// with the offending byte offset for bad opcodes or wrong lengths.
ComplexImage decode_response(const std::vector<std::uint8_t>& frame, int height, int width);

class PluginClient {
 public:
  /// Launches `/bin/sh -c command` and sends the handshake.
  static std::unique_ptr<PluginClient> spawn(const std::string& command, int height, int width,
                                             std::chrono::milliseconds deadline = kDefaultDeadline);
  /// Adopts already-connected descriptors (no child process).
  PluginClient(int to_plugin, int from_plugin, pid_t child, int height, int width,
               std::chrono::milliseconds deadline);
  ~PluginClient();

  PluginClient(const PluginClient&) = delete;
  PluginClient& operator=(const PluginClient&) = delete;

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  long long requests() const noexcept { return requests_; }

  /// Sends one request and waits for its response. Throws PluginTimeout,
  /// ProtocolError or TransportError.
  ComplexImage predict_noise(const ComplexImage& x_t, int t, double alpha_bar);

 private:
  void write_all(const std::vector<std::uint8_t>& bytes);
  /// Reads up to n bytes, stopping early only at EOF. Returns the count read.
  std::size_t read_exact(std::uint8_t* dst, std::size_t n,
                         std::chrono::steady_clock::time_point deadline);

  int to_plugin_;
  int from_plugin_;
  pid_t child_;
  int height_;
  int width_;
  std::chrono::milliseconds deadline_;
  long long requests_ = 0;
};

/// ScorePrior backed by a plug-in process. Calls are serialized.
class PluginPrior final : public ScorePrior {
 public:
  explicit PluginPrior(std::unique_ptr<PluginClient> client) : client_(std::move(client)) {}
  ComplexImage predict_noise(const ComplexImage& x_t, int t, double alpha_bar) const override;

 private:
  std::unique_ptr<PluginClient> client_;
  mutable std::mutex mutex_;
};

ComplexImage external_predict_noise(PluginClient& client, const ComplexImage& x_t, int t,
                                    double alpha_bar_t);

}  // namespace zads::plugin
