#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace stochmech {

/// Number of worker threads; 0 means hardware concurrency.
struct Execution {
  unsigned threads = 0;

  unsigned resolved() const {
    if (threads > 0) return threads;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

/// Calls fn(begin, end, chunk) over contiguous chunks of [0, n). Chunk
/// boundaries depend only on n and the thread count; callers must make the
/// per-item work independent of chunking.
template <class Fn>
void parallel_chunks(std::size_t n, const Execution& exec, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(exec.resolved(), std::max<std::size_t>(1, n / 1024));
  if (workers <= 1) {
    fn(std::size_t{0}, n, std::size_t{0});
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t per = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * per;
    const std::size_t e = std::min(n, b + per);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e, w] { fn(b, e, w); });
  }
}

}  // namespace stochmech
