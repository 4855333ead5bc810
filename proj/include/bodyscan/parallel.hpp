#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bodyscan {

/// Runs fn(i) for i in [0, n) on contiguous index blocks across threads.
/// Callers write results into slot i only, so the output is identical to a
/// serial loop regardless of thread count.
template <typename F>
void parallel_for(std::size_t n, F&& fn, unsigned num_threads = 0) {
  if (n == 0) return;
  unsigned hw = num_threads ? num_threads : std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(hw, n));

  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = n * t / threads;
    const std::size_t end = n * (t + 1) / threads;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace bodyscan
