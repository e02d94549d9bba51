#include "cplan/logging.hpp"

#include <cstdlib>
#include <iostream>

namespace cplan::logging {

Level level() {
  static Level cached = [] {
    const char* env = std::getenv("PLANNER_LOG_LEVEL");
    if (!env) return Level::kError;
    std::string v(env);
    if (v == "debug") return Level::kDebug;
    if (v == "info") return Level::kInfo;
    return Level::kError;
  }();
  return cached;
}

bool enabled(Level lvl) { return static_cast<int>(lvl) <= static_cast<int>(level()); }

void log(Level lvl, const std::string& message) {
  if (!enabled(lvl)) return;
  const char* tag = lvl == Level::kError ? "error" : (lvl == Level::kInfo ? "info" : "debug");
  std::cerr << "[" << tag << "] " << message << "\n";
}

}  // namespace cplan::logging
