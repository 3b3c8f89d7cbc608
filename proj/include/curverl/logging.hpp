#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace curverl {

/// Process logger. Level comes from CURVERL_LOG_LEVEL (error, warn, info,
/// debug); unset means warn. An unrecognized value falls back to warn.
std::shared_ptr<spdlog::logger> logger();

/// Re-read CURVERL_LOG_LEVEL.
void configure_logging_from_env();

}  // namespace curverl
