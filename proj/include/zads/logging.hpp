#pragma once

#include <spdlog/spdlog.h>

#include <memory>
#include <utility>

namespace zads::log {

/// stderr logger; level from ZADS_LOG={error|info|debug}, default error.
spdlog::logger& logger();

template <typename... Args>
void error(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().error(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().info(fmt, std::forward<Args>(args)...);
}

template <typename... Args>
void debug(fmt::format_string<Args...> fmt, Args&&... args) {
  logger().debug(fmt, std::forward<Args>(args)...);
}

}  // namespace zads::log
