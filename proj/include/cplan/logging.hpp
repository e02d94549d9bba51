#pragma once

#include <string>

namespace cplan::logging {

enum class Level { kError = 0, kInfo = 1, kDebug = 2 };

// Level comes from PLANNER_LOG_LEVEL (error|info|debug), default error.
Level level();
bool enabled(Level lvl);
void log(Level lvl, const std::string& message);

inline void error(const std::string& m) { log(Level::kError, m); }
inline void info(const std::string& m) { log(Level::kInfo, m); }
inline void debug(const std::string& m) { log(Level::kDebug, m); }

}  // namespace cplan::logging
