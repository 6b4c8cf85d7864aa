#pragma once

// Minimal leveled logging to stderr. The level comes from SEMFUSE_LOG
// (error, warn, info, debug); default warn.

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

#include "semfuse/geometry.hpp"

namespace semfuse::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

inline Level parse_level(std::string_view s) {
  if (detail::iequals(s, "error")) return Level::kError;
  if (detail::iequals(s, "info")) return Level::kInfo;
  if (detail::iequals(s, "debug")) return Level::kDebug;
  return Level::kWarn;
}

inline Level& threshold() {
  static Level level = [] {
    const char* env = std::getenv("SEMFUSE_LOG");
    return env ? parse_level(env) : Level::kWarn;
  }();
  return level;
}

inline void write(Level level, std::string_view msg) {
  if (level > threshold()) return;
  static std::mutex m;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(m);
  std::cerr << "semfuse " << names[static_cast<int>(level)] << ": " << msg << '\n';
}

inline void error(std::string_view msg) { write(Level::kError, msg); }
inline void warn(std::string_view msg) { write(Level::kWarn, msg); }
inline void info(std::string_view msg) { write(Level::kInfo, msg); }
inline void debug(std::string_view msg) { write(Level::kDebug, msg); }

}  // namespace semfuse::log
