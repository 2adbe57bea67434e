#include "asep/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace asep {

namespace {

int g_workers = 0;  // 0 = auto

int env_default() {
  if (const char* e = std::getenv("ASEP_THREADS")) {
    const int v = std::atoi(e);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

void set_worker_count(int n) { g_workers = n < 0 ? 0 : n; }

int worker_count() { return g_workers > 0 ? g_workers : env_default(); }

void parallel_chunks(std::int64_t n_chunks,
                     const std::function<void(std::int64_t)>& fn) {
  if (n_chunks <= 0) return;
  const int workers = worker_count();
  if (workers <= 1 || n_chunks == 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) fn(c);
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto body = [&] {
    while (true) {
      const std::int64_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= n_chunks) break;
      fn(c);
    }
  };
  std::vector<std::thread> pool;
  const int spawn = static_cast<int>(
      std::min<std::int64_t>(workers, n_chunks));
  pool.reserve(static_cast<std::size_t>(spawn - 1));
  for (int i = 1; i < spawn; ++i) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
}

}  // namespace asep
