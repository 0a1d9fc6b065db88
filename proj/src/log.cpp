#include "padx/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include <memory>
#include <string>

#include "padx/errors.hpp"

namespace padx {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
    auto log = std::make_shared<spdlog::logger>("padx", sink);
    log->set_pattern("[%l] %v");
    log->set_level(spdlog::level::warn);
    return log;
  }();
  return *instance;
}

void set_log_level(std::string_view level) {
  const auto parsed = spdlog::level::from_str(std::string(level));
  // from_str maps unknown names to "off"; only accept "off" when asked for.
  if (parsed == spdlog::level::off && level != "off") {
    throw InputError("unknown log level '" + std::string(level) + "'");
  }
  logger().set_level(parsed);
}

}  // namespace padx
