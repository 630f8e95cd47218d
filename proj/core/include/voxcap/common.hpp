// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace voxcap {

// Error taxonomy. Everything that is a caller mistake or an unusable input
// throws one of these; numerical blow-ups inside iterative routines throw
// NumericalError so drivers can distinguish them from bugs.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateInput : std::runtime_error {
  explicit DegenerateInput(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct BudgetExhausted : std::runtime_error {
  explicit BudgetExhausted(const std::string& msg) : std::runtime_error(msg) {}
};

struct NoReachablePose : std::runtime_error {
  explicit NoReachablePose(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyModel : std::runtime_error {
  explicit EmptyModel(const std::string& msg) : std::runtime_error(msg) {}
};

inline int worker_count() {
  if (const char* env = std::getenv("VOXCAP_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(begin, end) over fixed-size chunks of [0, n). Chunk boundaries
// depend only on n and chunk_size, never on the worker count, so reductions
// that combine per-chunk partials in chunk order are deterministic.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace voxcap
