#include "vlgen/log.hpp"

#include <iostream>
#include <mutex>

namespace vlgen {
namespace {

std::mutex g_mutex;

WarningHandler& handler() {
  static WarningHandler h = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return h;
}

}  // namespace

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_mutex);
  if (handler()) handler()(message);
}

WarningHandler set_warning_handler(WarningHandler h) {
  std::lock_guard<std::mutex> lock(g_mutex);
  WarningHandler old = std::move(handler());
  handler() = std::move(h);
  return old;
}

}  // namespace vlgen
