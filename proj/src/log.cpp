#include "tracebench/log.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>

namespace tracebench {

namespace {

std::optional<LogLevel>& override_level() {
  static std::optional<LogLevel> level;
  return level;
}

LogLevel from_env() {
  const char* v = std::getenv("TRACEBENCH_LOG_LEVEL");
  if (!v) return LogLevel::kWarn;
  const std::string s(v);
  if (s == "error") return LogLevel::kError;
  if (s == "info") return LogLevel::kInfo;
  if (s == "debug") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

const char* name(LogLevel l) {
  switch (l) {
    case LogLevel::kError:
      return "error";
    case LogLevel::kWarn:
      return "warn";
    case LogLevel::kInfo:
      return "info";
    case LogLevel::kDebug:
      return "debug";
  }
  return "?";
}

}  // namespace

LogLevel log_level() {
  static const LogLevel env = from_env();
  return override_level().value_or(env);
}

void set_log_level(LogLevel level) { override_level() = level; }

void log_message(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  std::cerr << "tracebench " << name(level) << ": " << msg << '\n';
}

}  // namespace tracebench
