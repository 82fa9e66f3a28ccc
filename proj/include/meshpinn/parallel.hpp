#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace meshpinn {

/// Worker count: MESHPINN_THREADS if set, else the hardware concurrency.
inline int default_thread_count() {
  if (const char* env = std::getenv("MESHPINN_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(chunk, worker) for every chunk in [0, n_chunks). Chunks are claimed
/// dynamically, so callers must write results per chunk and reduce them in
/// chunk order afterwards; the outcome is then independent of thread count.
template <class Fn>
void run_chunks(std::size_t n_chunks, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n_chunks <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) fn(c, std::size_t{0});
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  const std::size_t used = std::min(workers, n_chunks);
  pool.reserve(used);
  for (std::size_t w = 0; w < used; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = next++; c < n_chunks; c = next++) fn(c, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace meshpinn
