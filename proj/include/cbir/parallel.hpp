#pragma once

#include <functional>

namespace cbir {

// Runs fn(i) for i in [0, count) across a fixed thread pool. Results must be
// written to per-index slots so the outcome is independent of scheduling.
// threads = 0 picks the hardware count; threads = 1 runs inline.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace cbir
