// SPDX-License-Identifier: Apache-2.0

#ifndef TOUCHPASS_PARALLEL_HPP_
#define TOUCHPASS_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace touchpass {

inline unsigned DefaultThreads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n). Work is handed out dynamically; callers write
// results into pre-sized slots so the outcome does not depend on scheduling.
// The first exception thrown by any task is rethrown on the calling thread.
template <typename Fn>
void ParallelFor(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace touchpass

#endif  // TOUCHPASS_PARALLEL_HPP_
