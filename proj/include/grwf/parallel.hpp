#pragma once

// Index-addressed worker pool: results land in slot k whatever thread ran
// item k, so output does not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace grwf {

inline int default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

template <class T, class Fn>
std::vector<T> parallel_map(size_t n, int workers, Fn&& fn) {
  std::vector<T> out(n);
  if (workers <= 1 || n < 2) {
    for (size_t k = 0; k < n; ++k) out[k] = fn(k);
    return out;
  }
  std::atomic<size_t> next{0};
  std::mutex mu;
  size_t failed_at = n;
  std::exception_ptr err;
  auto work = [&] {
    for (;;) {
      const size_t k = next.fetch_add(1);
      if (k >= n) return;
      try {
        out[k] = fn(k);
      } catch (...) {
        // keep the error of the lowest index so failures are reproducible too
        std::lock_guard<std::mutex> lk(mu);
        if (k < failed_at) {
          failed_at = k;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const int w = static_cast<int>(std::min<size_t>(workers, n));
  for (int i = 0; i < w; ++i) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace grwf
