#include "swrc/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace swrc {

namespace {
std::atomic<LogLevel> g_level{LogLevel::kWarn};
std::mutex g_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_warn(const std::string& msg) {
  if (g_level < LogLevel::kWarn) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "warning: " << msg << '\n';
}

void log_info(const std::string& msg) {
  if (g_level < LogLevel::kInfo) return;
  std::lock_guard lock(g_mutex);
  std::cerr << msg << '\n';
}

}  // namespace swrc
