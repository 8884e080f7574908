#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace slt::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

// Verbosity comes from the SLT_LOG environment variable (debug|info|warn|error).
inline Level threshold() {
  static Level lvl = [] {
    const char* env = std::getenv("SLT_LOG");
    if (env == nullptr) return Level::kInfo;
    if (std::strcmp(env, "debug") == 0) return Level::kDebug;
    if (std::strcmp(env, "warn") == 0) return Level::kWarn;
    if (std::strcmp(env, "error") == 0) return Level::kError;
    return Level::kInfo;
  }();
  return lvl;
}

inline void emit(Level lvl, const std::string& msg) {
  if (static_cast<int>(lvl) < static_cast<int>(threshold())) return;
  const char* tag = lvl == Level::kDebug  ? "debug"
                    : lvl == Level::kInfo ? "info"
                    : lvl == Level::kWarn ? "warn"
                                          : "error";
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

inline void debug(const std::string& msg) { emit(Level::kDebug, msg); }
inline void info(const std::string& msg) { emit(Level::kInfo, msg); }
inline void warn(const std::string& msg) { emit(Level::kWarn, msg); }
inline void error(const std::string& msg) { emit(Level::kError, msg); }

}  // namespace slt::log
