#pragma once

#include <spdlog/spdlog.h>

#include <string_view>

namespace padx {

// Library-wide logger. Always writes to stderr; stdout is left for reports.
spdlog::logger& logger();

// Accepts trace|debug|info|warn|error|off; throws InputError otherwise.
void set_log_level(std::string_view level);

}  // namespace padx
