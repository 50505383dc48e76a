#pragma once

#include <cstddef>
#include <functional>

namespace stochphase {

/// Number of workers for a requested count (0 means hardware concurrency).
int resolve_threads(int requested);

/// Runs body(i) for i in [0, n) on up to `threads` workers with a static
/// partition. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace stochphase
