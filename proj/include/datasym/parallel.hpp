// Chunked parallel-for over an index range. Results must be written to
// disjoint slots (or reduced per chunk and combined in index order) so that
// the outcome does not depend on scheduling.
#ifndef DATASYM_PARALLEL_HPP
#define DATASYM_PARALLEL_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace datasym {

inline int& thread_count() {
  static int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return n;
}

inline void set_thread_count(int n) { thread_count() = std::max(1, n); }

// fn(begin, end) is called on consecutive, disjoint subranges of [0, n).
inline void parallel_chunks(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  const int workers = std::min<std::int64_t>(thread_count(), n > 0 ? n : 1);
  if (workers <= 1 || n < 2) {
    if (n > 0) fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = w * chunk;
    const std::int64_t hi = std::min<std::int64_t>(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  parallel_chunks(n, [&fn](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) fn(i);
  });
}

}  // namespace datasym

#endif
