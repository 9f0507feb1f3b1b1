#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dtc {

/// Worker count used by the parallel loops. 0 selects the hardware default.
void set_thread_count(int n);
int thread_count();

namespace detail {
inline thread_local bool in_parallel_region = false;
}

/// Runs fn(i) for i in [0, n). Work is handed out dynamically, so fn must only
/// write to slot i of its output; that keeps results independent of the thread
/// count. The first exception thrown by any worker is rethrown here. Nested
/// calls from inside a worker run serially.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1 || detail::in_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    const bool outer = detail::in_parallel_region;
    detail::in_parallel_region = true;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
    detail::in_parallel_region = outer;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace dtc
