#pragma once

#include <cstddef>
#include <functional>

namespace clickmodel {

/// Worker count from CLICKMODEL_THREADS, else the hardware concurrency (>= 1).
int default_threads();

/// Runs body(k) for k in [0, count) on up to `threads` workers. Results must
/// be written to per-k slots; any exception is rethrown on the caller.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

/// Fixed chunking of n items that depends on n only, never on the worker
/// count, so chunk-wise reductions are bit-identical for any thread count.
struct Chunking {
  std::size_t size;
  std::size_t count;
};
Chunking chunking_for(std::size_t n);

}  // namespace clickmodel
