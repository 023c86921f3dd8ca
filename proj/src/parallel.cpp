#include "locfrk/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace locfrk {

namespace {
std::atomic<std::size_t> g_override{0};
}

std::size_t worker_count() {
  if (const std::size_t o = g_override.load(); o != 0) {
    return o;
  }
  std::size_t n = 0;
  if (const char *env = std::getenv("KRIG_THREADS")) {
    try {
      n = static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception &) {
      n = 0;
    }
  }
  if (n == 0) {
    n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
  return n;
}

void set_worker_count(std::size_t n) { g_override.store(n); }

} // namespace locfrk
