#pragma once

#include <cstddef>
#include <functional>

namespace detfuse {

/// Worker count: DETFUSE_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Callers
/// write results into pre-sized slots so output does not depend on
/// scheduling. The exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace detfuse
