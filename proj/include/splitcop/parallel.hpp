#pragma once

#include <cstddef>
#include <functional>

namespace splitcop {

// Worker cap: SPLITCOP_THREADS if set, otherwise the hardware count.
int max_threads();

// Calls fn(begin, end) on disjoint contiguous blocks covering [0, n).
// Callers must write only to per-index slots; results are then independent
// of the actual thread count.
void parallel_for_blocks(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace splitcop
