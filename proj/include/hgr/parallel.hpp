#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace hgr {

/// Calls fn(i, worker) for i in [0, n) on up to `workers` threads. Items are
/// handed out dynamically. If any call throws, the exception of the smallest
/// failing index is rethrown after all threads finish.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  workers = std::clamp(workers, 1, std::max(n, 1));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w]() {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i, w);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace hgr
