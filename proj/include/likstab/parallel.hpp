#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace likstab {

/// Worker count: explicit request if positive, else LIKSTAB_THREADS, else 1.
int resolve_threads(int requested = 0);

/// Process-wide default used by library loops that take no explicit count.
void set_default_threads(int n);
int default_threads();

/// Runs body(i) for i in [0, count). Work is handed out in index order from a
/// shared counter; callers write results into slot i, so the outcome never
/// depends on scheduling. If any body throws, the exception of the lowest
/// failing index is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t count, Body&& body, int threads = 0) {
  const int nt = std::max(1, std::min<int>(threads > 0 ? threads : default_threads(), static_cast<int>(count)));
  if (nt <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::size_t err_index = count;
  std::exception_ptr err;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || stop.load()) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
        stop.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nt - 1);
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace likstab
