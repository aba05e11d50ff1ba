#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace unlinked {

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Run body(i) for i in [begin, end) on up to `threads` threads, in contiguous
/// index blocks. Results must be written to per-index slots by the caller;
/// because the work split never affects what any index computes, output is
/// identical for every thread count. The first exception thrown by any body is
/// rethrown on the calling thread.
template <class F>
void parallel_for(std::size_t begin, std::size_t end, unsigned threads, F&& body) {
  if (end <= begin) return;
  const std::size_t count = end - begin;
  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), count));

  if (n_threads <= 1) {
    for (std::size_t i = begin; i < end; ++i) body(i);
    return;
  }

  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto run_block = [&](std::size_t lo, std::size_t hi) {
    try {
      for (std::size_t i = lo; i < hi; ++i) {
        {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (first_error) return;
        }
        body(i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(n_threads - 1);
  const std::size_t chunk = (count + n_threads - 1) / n_threads;
  for (unsigned t = 1; t < n_threads; ++t) {
    const std::size_t lo = begin + t * chunk;
    if (lo >= end) break;
    const std::size_t hi = std::min(end, lo + chunk);
    pool.emplace_back(run_block, lo, hi);
  }
  run_block(begin, std::min(end, begin + chunk));
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace unlinked
