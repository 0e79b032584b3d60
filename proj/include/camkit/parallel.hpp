#pragma once

#include <cstddef>
#include <functional>

namespace camkit {

/// Worker cap: CAMKIT_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Calls fn(i) for i in [0, n) on up to `workers` threads. Results must be
/// written to per-index slots; if any call throws, the exception from the
/// lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t workers = worker_count());

}  // namespace camkit
