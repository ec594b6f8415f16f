#include "zads/plugin.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>
#include <thread>

#include "zads/errors.hpp"
#include "zads/logging.hpp"

namespace zads::plugin {

namespace {

static_assert(std::endian::native == std::endian::little, "wire format assumes a little-endian host");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_payload(std::vector<std::uint8_t>& out, const ComplexImage& x) {
  for (const auto& v : x.values()) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v.real())));
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v.imag())));
  }
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

ComplexImage get_payload(const std::uint8_t* p, int height, int width) {
  ComplexImage x(height, width);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float re = std::bit_cast<float>(get_u32(p + 8 * i));
    const float im = std::bit_cast<float>(get_u32(p + 8 * i + 4));
    x[i] = Complex{re, im};
  }
  return x;
}

std::size_t payload_bytes(int height, int width) {
  return static_cast<std::size_t>(height) * width * 2 * sizeof(float);
}

}  // namespace

std::vector<std::uint8_t> encode_handshake(std::uint32_t height, std::uint32_t width,
                                           std::uint32_t version) {
  std::vector<std::uint8_t> out{'Z', 'A', 'D', 'P'};
  put_u32(out, version);
  put_u32(out, height);
  put_u32(out, width);
  return out;
}

std::vector<std::uint8_t> encode_request(std::uint32_t t, double alpha_bar, const ComplexImage& x) {
  std::vector<std::uint8_t> out;
  out.reserve(13 + payload_bytes(x.height(), x.width()));
  out.push_back(kOpRequest);
  put_u32(out, t);
  put_u64(out, std::bit_cast<std::uint64_t>(alpha_bar));
  put_payload(out, x);
  return out;
}

std::vector<std::uint8_t> encode_response(const ComplexImage& eps) {
  std::vector<std::uint8_t> out;
  out.reserve(1 + payload_bytes(eps.height(), eps.width()));
  out.push_back(kOpResponse);
  put_payload(out, eps);
  return out;
}

std::vector<std::uint8_t> encode_error(const std::string& message) {
  std::vector<std::uint8_t> out{kOpError};
  put_u32(out, static_cast<std::uint32_t>(message.size()));
  out.insert(out.end(), message.begin(), message.end());
  return out;
}

ComplexImage decode_response(const std::vector<std::uint8_t>& frame, int height, int width) {
  if (frame.empty()) throw ProtocolError("empty response frame", 0);
  if (frame[0] == kOpError) {
    if (frame.size() < 5) throw ProtocolError("truncated error frame", static_cast<long long>(frame.size()));
    const std::uint32_t len = get_u32(frame.data() + 1);
    if (frame.size() != 5 + static_cast<std::size_t>(len))
      throw ProtocolError("error frame length mismatch", static_cast<long long>(std::min<std::size_t>(frame.size(), 5 + len)));
    throw ProtocolError("plug-in reported error: " + std::string(frame.begin() + 5, frame.end()), 0);
  }
  if (frame[0] != kOpResponse)
    throw ProtocolError("unexpected opcode " + std::to_string(frame[0]) + " in response", 0);
  const std::size_t expected = 1 + payload_bytes(height, width);
  if (frame.size() < expected)
    throw ProtocolError("response payload truncated: expected " + std::to_string(expected) +
                            " bytes, got " + std::to_string(frame.size()),
                        static_cast<long long>(frame.size()));
  if (frame.size() > expected)
    throw ProtocolError("response payload has " + std::to_string(frame.size() - expected) +
                            " trailing bytes",
                        static_cast<long long>(expected));
  return get_payload(frame.data() + 1, height, width);
}

// ---------------------------------------------------------------------------

std::unique_ptr<PluginClient> PluginClient::spawn(const std::string& command, int height, int width,
                                                  std::chrono::milliseconds deadline) {
  int to_child[2];
  int from_child[2];
  if (pipe2(to_child, O_CLOEXEC) != 0) throw TransportError("plugin: pipe failed: " + std::string(std::strerror(errno)));
  if (pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw TransportError("plugin: pipe failed: " + std::string(std::strerror(errno)));
  }
  // a dead plug-in must surface as EPIPE, not terminate the host
  ::signal(SIGPIPE, SIG_IGN);

  const pid_t pid = ::fork();
  if (pid < 0) throw TransportError("plugin: fork failed: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    ::setpgid(0, 0);  // own process group, so the shell and its children die together
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(to_child[0]);
  ::close(from_child[1]);
  log::info("started plug-in '{}' (pid {})", command, pid);
  return std::make_unique<PluginClient>(to_child[1], from_child[0], pid, height, width, deadline);
}

PluginClient::PluginClient(int to_plugin, int from_plugin, pid_t child, int height, int width,
                           std::chrono::milliseconds deadline)
    : to_plugin_(to_plugin), from_plugin_(from_plugin), child_(child), height_(height),
      width_(width), deadline_(deadline) {
  if (height < 1 || width < 1) throw InvalidArgument("PluginClient: empty image shape");
  write_all(encode_handshake(static_cast<std::uint32_t>(height), static_cast<std::uint32_t>(width)));
}

PluginClient::~PluginClient() {
  if (to_plugin_ >= 0) ::close(to_plugin_);
  if (from_plugin_ >= 0) ::close(from_plugin_);
  if (child_ > 0) {
    // closing stdin asks the plug-in to exit; give it a moment, then kill
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(child_, nullptr, WNOHANG) == child_) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(-child_, SIGKILL);
    ::waitpid(child_, nullptr, 0);
  }
}

void PluginClient::write_all(const std::vector<std::uint8_t>& bytes) {
  if (to_plugin_ < 0) throw TransportError("plugin: stream is closed");
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(to_plugin_, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("plugin: write failed: " + std::string(std::strerror(errno)));
    }
    done += static_cast<std::size_t>(n);
  }
}

std::size_t PluginClient::read_exact(std::uint8_t* dst, std::size_t n,
                                     std::chrono::steady_clock::time_point deadline) {
  std::size_t got = 0;
  while (got < n) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) throw PluginTimeout("plugin: no response within deadline");
    pollfd pfd{from_plugin_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw TransportError("plugin: poll failed: " + std::string(std::strerror(errno)));
    }
    if (ready == 0) throw PluginTimeout("plugin: no response within deadline");
    const ssize_t r = ::read(from_plugin_, dst + got, n - got);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError("plugin: read failed: " + std::string(std::strerror(errno)));
    }
    if (r == 0) break;
    got += static_cast<std::size_t>(r);
  }
  return got;
}

ComplexImage PluginClient::predict_noise(const ComplexImage& x_t, int t, double alpha_bar) {
  if (x_t.height() != height_ || x_t.width() != width_)
    throw DimensionMismatch("plugin: request shape does not match the negotiated shape");
  if (t < 0) throw InvalidArgument("plugin: negative timestep");

  // any failure leaves the stream at an unknown position
  struct Poison {
    PluginClient* self;
    bool armed = true;
    ~Poison() {
      if (armed && self->from_plugin_ >= 0) {
        ::close(self->from_plugin_);
        self->from_plugin_ = -1;
        ::close(self->to_plugin_);
        self->to_plugin_ = -1;
      }
    }
  } poison{this};

  if (from_plugin_ < 0) throw TransportError("plugin: stream is closed");
  write_all(encode_request(static_cast<std::uint32_t>(t), alpha_bar, x_t));
  ++requests_;
  const auto deadline = std::chrono::steady_clock::now() + deadline_;

  std::uint8_t opcode = 0;
  if (read_exact(&opcode, 1, deadline) != 1) throw TransportError("plugin: stream closed before response");

  if (opcode == kOpResponse) {
    std::vector<std::uint8_t> frame(1 + payload_bytes(height_, width_));
    frame[0] = opcode;
    const std::size_t got = read_exact(frame.data() + 1, frame.size() - 1, deadline);
    frame.resize(1 + got);
    ComplexImage eps = decode_response(frame, height_, width_);
    poison.armed = false;
    return eps;
  }
  if (opcode == kOpError) {
    std::uint8_t len_bytes[4];
    const std::size_t got = read_exact(len_bytes, 4, deadline);
    if (got != 4) throw ProtocolError("truncated error frame", static_cast<long long>(1 + got));
    const std::uint32_t len = get_u32(len_bytes);
    std::string message(len, '\0');
    const std::size_t msg_got = read_exact(reinterpret_cast<std::uint8_t*>(message.data()), len, deadline);
    if (msg_got != len) throw ProtocolError("truncated error message", static_cast<long long>(5 + msg_got));
    throw ProtocolError("plug-in reported error: " + message, 0);
  }
  throw ProtocolError("unexpected opcode " + std::to_string(opcode) + " in response", 0);
}

ComplexImage PluginPrior::predict_noise(const ComplexImage& x_t, int t, double alpha_bar) const {
  std::lock_guard lock(mutex_);
  return client_->predict_noise(x_t, t, alpha_bar);
}

ComplexImage external_predict_noise(PluginClient& client, const ComplexImage& x_t, int t,
                                    double alpha_bar_t) {
  return client.predict_noise(x_t, t, alpha_bar_t);
}

}  // namespace zads::plugin
