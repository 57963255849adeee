#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ctxprobe {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// stops further dispatch and is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (n == 0) return;
  const std::size_t w = std::min<std::size_t>(n, std::size_t(std::max(1, workers)));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
      pool.emplace_back([&] {
        while (!stop.load(std::memory_order_relaxed)) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) break;
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
            stop = true;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace ctxprobe
