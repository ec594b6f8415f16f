// Test double for the denoiser plug-in protocol. Usage: fake_plugin MODE
//   zero      respond with eps = 0
//   echo      respond with eps = x_t (payload returned verbatim)
//   slow      never respond
//   truncate  send half a response, then exit
//   badop     respond with opcode 7
//   error     respond with an error frame
//   exit      exit right after the handshake
// Malformed handshakes or request opcodes produce an error frame and exit 1.

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

namespace {

bool read_all(void* dst, std::size_t n) {
  auto* p = static_cast<std::uint8_t*>(dst);
  while (n > 0) {
    const ssize_t r = ::read(STDIN_FILENO, p, n);
    if (r <= 0) return false;
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

void write_all(const void* src, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(src);
  while (n > 0) {
    const ssize_t w = ::write(STDOUT_FILENO, p, n);
    if (w <= 0) return;
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

void send_error(const std::string& msg) {
  const std::uint8_t op = 255;
  const auto len = static_cast<std::uint32_t>(msg.size());
  write_all(&op, 1);
  write_all(&len, 4);
  write_all(msg.data(), msg.size());
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "zero";
  char magic[4];
  std::uint32_t version = 0, h = 0, w = 0;
  if (!read_all(magic, 4) || !read_all(&version, 4) || !read_all(&h, 4) || !read_all(&w, 4)) return 1;
  if (std::memcmp(magic, "ZADP", 4) != 0) {
    send_error("bad handshake magic");
    return 1;
  }
  if (version != 1) {
    send_error("unsupported protocol version " + std::to_string(version));
    return 1;
  }
  if (mode == "exit") return 0;

  const std::size_t payload = static_cast<std::size_t>(h) * w * 8;
  std::vector<std::uint8_t> buf(payload);
  for (;;) {
    std::uint8_t op = 0;
    if (!read_all(&op, 1)) return 0;
    if (op != 1) {
      send_error("unknown opcode " + std::to_string(op));
      return 1;
    }
    std::uint8_t head[12];
    if (!read_all(head, 12) || !read_all(buf.data(), payload)) return 1;

    if (mode == "slow") {
      std::this_thread::sleep_for(std::chrono::seconds(30));
      return 0;
    }
    if (mode == "error") {
      send_error("denoiser failed");
      continue;
    }
    const std::uint8_t reply = mode == "badop" ? 7 : 2;
    write_all(&reply, 1);
    if (mode == "zero") std::fill(buf.begin(), buf.end(), 0);
    if (mode == "truncate") {
      write_all(buf.data(), payload / 2);
      return 0;
    }
    write_all(buf.data(), payload);
  }
}
