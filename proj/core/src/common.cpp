// SPDX-License-Identifier: Apache-2.0
#include "voxcap/common.hpp"

#include <algorithm>
#include <atomic>

namespace voxcap {

void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
  const int workers = std::min<std::size_t>(worker_count(), n_chunks);

  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const std::size_t begin = c * chunk_size;
      fn(c, begin, std::min(begin + chunk_size, n));
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t c = next.fetch_add(1);
        if (c >= n_chunks) return;
        const std::size_t begin = c * chunk_size;
        fn(c, begin, std::min(begin + chunk_size, n));
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace voxcap
