#include "curverl/logging.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace curverl {
namespace {

spdlog::level::level_enum level_from_env() {
  const char* raw = std::getenv("CURVERL_LOG_LEVEL");
  if (raw == nullptr) return spdlog::level::warn;
  const std::string_view v(raw);
  if (v == "error") return spdlog::level::err;
  if (v == "warn") return spdlog::level::warn;
  if (v == "info") return spdlog::level::info;
  if (v == "debug") return spdlog::level::debug;
  return spdlog::level::warn;
}

}  // namespace

std::shared_ptr<spdlog::logger> logger() {
  static auto instance = [] {
    auto l = spdlog::stderr_color_mt("curverl");
    l->set_pattern("[%l] %v");
    l->set_level(level_from_env());
    return l;
  }();
  return instance;
}

void configure_logging_from_env() { logger()->set_level(level_from_env()); }

}  // namespace curverl
