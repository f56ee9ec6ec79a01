#pragma once

#include <cstdint>
#include <functional>

namespace csod {

// Worker thread cap from CSOD_THREADS (default 1 = deterministic reference mode).
int max_threads();

// Runs fn(begin, end) over contiguous blocks of [begin, end). Every element is
// processed by exactly one thread, so ops whose outputs are computed
// elementwise with a fixed per-element reduction order stay bit-exact for any
// thread count.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace csod
