#include "eit/numeric.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace eit {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EIT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 1;
}

void parallel_chunks(std::int64_t n, std::int64_t chunk_size,
                     const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn,
                     int threads) {
  if (n <= 0) return;
  if (chunk_size <= 0) chunk_size = 1;
  const std::int64_t nchunks = (n + chunk_size - 1) / chunk_size;
  const int nw = std::min<std::int64_t>(resolve_threads(threads), nchunks);
  if (nw <= 1) {
    for (std::int64_t c = 0; c < nchunks; ++c)
      fn(c * chunk_size, std::min(n, (c + 1) * chunk_size), c);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (int t = 0; t < nw; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t c = next.fetch_add(1);
        if (c >= nchunks || failed.load()) return;
        try {
          fn(c * chunk_size, std::min(n, (c + 1) * chunk_size), c);
        } catch (...) {
          if (!failed.exchange(true)) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace eit
