#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dfd {

namespace detail {
inline int& max_threads_storage() {
  static int value = []() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
  }();
  return value;
}
}  // namespace detail

/// Caps the size of every pool spawned by parallel_for (n <= 0 resets to the
/// hardware concurrency).
inline void set_max_threads(int n) {
  detail::max_threads_storage() =
      n > 0 ? n
            : static_cast<int>(std::thread::hardware_concurrency() == 0
                                   ? 1
                                   : std::thread::hardware_concurrency());
}

inline int max_threads() { return detail::max_threads_storage(); }

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = global cap).
/// Iterations are partitioned into contiguous static chunks, so results
/// written to disjoint per-index slots are identical to a serial run.
/// The first exception thrown by any worker is rethrown after the join.
template <class F>
void parallel_for(std::size_t n, F&& body, int threads = 0) {
  int t = threads > 0 ? threads : max_threads();
  if (static_cast<std::size_t>(t) > n) t = static_cast<int>(n);
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(t));
  for (int w = 0; w < t; ++w) {
    const std::size_t begin = n * static_cast<std::size_t>(w) / static_cast<std::size_t>(t);
    const std::size_t end = n * (static_cast<std::size_t>(w) + 1) / static_cast<std::size_t>(t);
    pool.emplace_back([&, begin, end]() {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace dfd
