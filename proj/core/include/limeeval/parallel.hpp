#pragma once

#include <cstddef>
#include <functional>

namespace limeeval {

/// Worker count: LIMEEVAL_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
std::size_t default_thread_count();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// visited exactly once; results must be written to per-index slots so the
/// schedule cannot affect them. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads = default_thread_count());

}  // namespace limeeval
