#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "wdpg/rng.hpp"

namespace wdpg {

/// How a batch of independent Monte Carlo tasks is split and seeded.
///
/// Work is cut into fixed chunks of `chunk_size` items. Chunk i always draws
/// from Rng(derive_seed(seed, tag, i)), so results depend on (seed, tag) only,
/// never on the number of workers.
struct BatchPlan {
  std::uint64_t seed = 0;
  std::uint64_t tag = stream_tag::kBatch;
  int workers = 1;
  std::int64_t chunk_size = 4096;
};

/// Runs fn(chunk_index, begin, end, rng) over [0, n) and returns one result
/// per chunk, in chunk order.
template <class Result, class Fn>
std::vector<Result> run_chunked(std::int64_t n, const BatchPlan& plan, Fn&& fn) {
  const std::int64_t chunk = std::max<std::int64_t>(1, plan.chunk_size);
  const std::int64_t n_chunks = n <= 0 ? 0 : (n + chunk - 1) / chunk;
  std::vector<Result> results(static_cast<std::size_t>(n_chunks));

  auto run_one = [&](std::int64_t c) {
    Rng rng(derive_seed(plan.seed, plan.tag, static_cast<std::uint64_t>(c)));
    const std::int64_t begin = c * chunk;
    const std::int64_t end = std::min(n, begin + chunk);
    results[static_cast<std::size_t>(c)] = fn(c, begin, end, rng);
  };

  const int workers = static_cast<int>(std::clamp<std::int64_t>(plan.workers, 1, std::max<std::int64_t>(1, n_chunks)));
  if (workers == 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) run_one(c);
    return results;
  }

  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::int64_t c = next++; c < n_chunks; c = next++) {
        try {
          run_one(c);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace wdpg
