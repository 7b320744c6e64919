#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace electroad {

/// Worker count from ELECTROAD_THREADS (unset or 0 = hardware concurrency).
unsigned worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. If any call throws, the
/// exception from the lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace electroad
