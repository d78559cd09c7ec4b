#pragma once

#include <cstddef>
#include <functional>

namespace jumplab {

// Worker count used by parallel_for. Defaults to JUMPLAB_THREADS if set,
// else the hardware concurrency.
int thread_count();
void set_thread_count(int n);

// Runs fn(i) for i in [0, n) in static contiguous chunks. Callers write to
// per-index slots and reduce sequentially afterwards, so results never
// depend on the worker count. Exceptions are rethrown on the caller
// (the one from the lowest chunk wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace jumplab
