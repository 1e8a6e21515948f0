#pragma once

#include <cstddef>
#include <functional>

namespace gold {

// Thread count from GOLD_FORGE_THREADS, or 1 when unset/invalid.
unsigned default_threads();

// Runs fn(i) for i in [0, n) on up to `threads` workers using static
// contiguous chunks. fn must only write to slots owned by index i, so the
// result is independent of the thread count.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace gold
