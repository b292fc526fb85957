#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "fracint/numeric.hpp"

namespace fracint {

/// Worker count from FRACINT_THREADS, else the machine's parallelism.
inline unsigned thread_count() {
  if (const char* env = std::getenv("FRACINT_THREADS"); env != nullptr && *env != '\0') {
    try {
      const long n = std::stol(env);
      if (n >= 1) return static_cast<unsigned>(std::min(n, 256L));
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates `block(i)` for i in [0, blocks) on up to `threads` workers and
/// returns the results in index order. Scheduling never affects the output.
template <class Result, class Fn>
std::vector<Result> map_blocks(std::size_t blocks, Fn&& block, unsigned threads = thread_count()) {
  std::vector<Result> out(blocks);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));
  if (workers <= 1) {
    for (std::size_t i = 0; i < blocks; ++i) out[i] = block(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < blocks; i = next++) out[i] = block(i);
        } catch (...) {
          failures[w] = std::current_exception();
          next = blocks;
        }
      });
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

/// Fixed reduction tree: partial sums merged left to right.
inline double reduce_ordered(const std::vector<NeumaierSum>& partials) {
  NeumaierSum total;
  for (const auto& p : partials) total.merge(p);
  return total.value();
}

}  // namespace fracint
