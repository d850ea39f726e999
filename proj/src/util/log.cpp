#include "peacelens/util/log.hpp"

#include <atomic>

namespace peacelens::util {

namespace {
std::atomic<LogLevel> g_level{LogLevel::Warn};
std::mutex g_mu;
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log(LogLevel level, std::string_view message) {
  if (level < g_level.load()) return;
  static constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
  std::lock_guard lock(g_mu);
  std::clog << "[peacelens:" << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace peacelens::util
