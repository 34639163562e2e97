#pragma once

#include <cstddef>
#include <functional>

namespace tempo {

/// Worker count used by parallel helpers. Starts from TEMPO_CONTRAST_THREADS,
/// falling back to the hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs fn(i) for i in [0, n) over contiguous chunks. Results must not depend
/// on scheduling: each index is handled exactly once, by one worker.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace tempo
