#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace cspphase {

// 0 means: CSPPHASE_THREADS if set, else hardware concurrency.
int resolve_threads(int requested);

// Runs body(chunk) for chunk in [0, chunks) on up to `threads` workers.
// Callers write results into per-chunk slots and reduce them in chunk order.
void parallel_for(std::size_t chunks, int threads, const std::function<void(std::size_t)>& body);

// Splits `total` items into chunks of at most `chunk_size`.
struct ChunkPlan {
  std::size_t chunks;
  std::size_t chunk_size;
  std::size_t total;
  std::size_t begin(std::size_t c) const { return c * chunk_size; }
  std::size_t end(std::size_t c) const {
    const std::size_t e = (c + 1) * chunk_size;
    return e < total ? e : total;
  }
};

inline ChunkPlan plan_chunks(std::size_t total, std::size_t chunk_size) {
  if (chunk_size == 0) chunk_size = 1;
  return {(total + chunk_size - 1) / chunk_size, chunk_size, total};
}

}  // namespace cspphase
