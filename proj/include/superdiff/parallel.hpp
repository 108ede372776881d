/// Fixed-partition parallel loops whose results do not depend on the
/// number of worker threads.
#pragma once

#include <cstddef>
#include <functional>

namespace sdiff {

/// Worker count: SUPERDIFF_WORKERS if set and positive, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Overrides the worker count for the current process (0 restores the
/// environment-derived default).
void set_worker_count(int workers);

/// Runs body(i) for i in [0, n) on the worker pool. Tasks are claimed
/// dynamically; callers must write results into per-index slots so the
/// outcome is independent of scheduling. The first exception thrown by a
/// task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sdiff
