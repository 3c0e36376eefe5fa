#pragma once

#include <string>

namespace tracebench {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

/// Read once from TRACEBENCH_LOG_LEVEL (error, warn, info, debug); default warn.
LogLevel log_level();
void set_log_level(LogLevel level);

/// Diagnostics go to stderr so they never mix with command output.
void log_message(LogLevel level, const std::string& msg);
inline void log_warn(const std::string& msg) { log_message(LogLevel::kWarn, msg); }
inline void log_info(const std::string& msg) { log_message(LogLevel::kInfo, msg); }
inline void log_debug(const std::string& msg) { log_message(LogLevel::kDebug, msg); }

}  // namespace tracebench
