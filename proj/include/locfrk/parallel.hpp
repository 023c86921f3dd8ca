#ifndef LOCFRK_PARALLEL_HPP
#define LOCFRK_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace locfrk {

/// Worker cap from KRIG_THREADS (0 or unset = hardware concurrency).
std::size_t worker_count();

/// Overrides KRIG_THREADS for the rest of the process; 0 restores it.
void set_worker_count(std::size_t n);

/*
 * Runs body(i) for i in [0, n) over contiguous blocks. Callers must make each
 * body(i) independent of the others so results do not depend on the number
 * of workers.
 */
template <typename Body>
void parallel_for(std::size_t n, Body &&body) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) {
          body(i);
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) {
    std::rethrow_exception(error);
  }
}

} // namespace locfrk

#endif
