#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fqk {

inline std::size_t default_workers() {
  return std::max(1u, std::thread::hardware_concurrency());
}

/// out[i] = f(i) for i in [0, n), spread over `workers` threads. Results are
/// stored by index, so the output does not depend on scheduling. The first
/// exception thrown by any task is rethrown after all workers join.
template <class F>
auto parallel_map(std::size_t n, std::size_t workers, F&& f) {
  using R = decltype(f(std::size_t{0}));
  std::vector<R> out(n);
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        out[i] = f(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace fqk
