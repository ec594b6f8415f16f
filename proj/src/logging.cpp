#include "zads/logging.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include <cstdlib>
#include <string_view>

namespace zads::log {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = std::make_shared<spdlog::logger>("zads", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[zads %l] %v");
    const char* env = std::getenv("ZADS_LOG");
    const std::string_view level = env ? env : "error";
    if (level == "debug") {
      l->set_level(spdlog::level::debug);
    } else if (level == "info") {
      l->set_level(spdlog::level::info);
    } else {
      l->set_level(spdlog::level::err);
    }
    return l;
  }();
  return *instance;
}

}  // namespace zads::log
