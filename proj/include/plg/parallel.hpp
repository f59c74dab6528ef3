#pragma once

/// \file
/// Minimal data-parallel loop. The worker count comes from PLG_THREADS
/// (default 1); results must not depend on it.

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace plg {

inline int thread_count() {
  const char* env = std::getenv("PLG_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) return 1;
  return static_cast<int>(std::min<long>(n, 256));
}

/// Calls fn(i) for i in [0, n), split into contiguous blocks across threads.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, int threads = thread_count()) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * n / workers; i < (w + 1) * n / workers; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace plg
