#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace kaclab {

// f(idx) for idx in [0, n) on up to `threads` workers; the exception of the
// lowest failing index is rethrown after all workers finish
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
  std::size_t workers = std::max(1, threads);
  workers = std::min(workers, n);
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) {
      try {
        f(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n; k = next++) {
          try {
            f(k);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace kaclab
