#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace thermoshift {

// Deterministic work splitting: the block structure depends only on the job
// count, never on the thread count, so reductions combined block-by-block in
// index order give bit-identical results for any --threads value.
inline int hardware_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(j) for j in [0, jobs). fn must only write state owned by job j.
template <typename Fn>
void parallel_for(std::size_t jobs, int threads, Fn&& fn) {
  if (jobs == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(std::max(threads, 1), jobs);
  if (workers <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) fn(j);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([w, workers, jobs, &fn] {
      for (std::size_t j = w; j < jobs; j += workers) fn(j);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace thermoshift
