#pragma once

#include <cstddef>
#include <functional>

namespace fracwave {

/// Worker count: FRACWAVE_THREADS when set to a positive integer, else the
/// hardware concurrency. `requested` > 0 overrides both.
unsigned thread_count(int requested = 0);

/// Runs body(i) for i in [0, n) on up to thread_count(requested) threads.
/// Each index is handled exactly once; the first exception is rethrown
/// after all workers have stopped.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  int requested = 0);

}  // namespace fracwave
