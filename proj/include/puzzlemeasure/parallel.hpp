#pragma once

#include <cstddef>
#include <functional>

namespace puzzlemeasure {

/// Worker count: PUZZLEMEASURE_THREADS when set, else the hardware concurrency.
int thread_count();

/// Runs fn(i) for i in [0, n) on up to thread_count() threads. Results must be written to
/// per-index slots. The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace puzzlemeasure
