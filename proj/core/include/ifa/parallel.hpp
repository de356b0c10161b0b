#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ifa {

/// Resolves a requested worker count; 0 means all available hardware threads.
inline std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n). Iterations must not share mutable state;
/// under that contract results do not depend on the worker count.
template <typename Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body) {
  workers = std::min(resolve_workers(workers), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    try {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(n);
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

/// Splits [0, n) into fixed blocks of `block` indices and runs
/// body(block_index, begin, end) on each. Block boundaries depend only on n
/// and `block`, so per-block partial sums combined in block order are
/// bit-identical for any worker count.
template <typename Body>
void parallel_blocks(std::size_t n, std::size_t block, std::size_t workers, Body&& body) {
  const std::size_t blocks = (n + block - 1) / block;
  parallel_for(blocks, workers, [&](std::size_t b) {
    body(b, b * block, std::min(n, (b + 1) * block));
  });
}

inline std::size_t block_count(std::size_t n, std::size_t block) { return (n + block - 1) / block; }

}  // namespace ifa
