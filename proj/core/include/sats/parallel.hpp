#pragma once

#include <cstddef>
#include <functional>

namespace sats {

/// Worker count: hardware concurrency capped by the SATS_THREADS environment variable.
int thread_limit();

/// Runs fn(i) for i in [0, n). Each index is handled exactly once; results
/// must be written to per-index slots so output is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace sats
