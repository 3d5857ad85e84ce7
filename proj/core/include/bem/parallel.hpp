#pragma once

#include <cstddef>
#include <functional>

namespace bem {

/// Worker cap from the BEM_THREADS environment variable (read on every call);
/// defaults to the hardware concurrency, never below 1.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) on up to `workers` threads using contiguous
/// chunks. fn must only write to state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t workers = worker_count());

}  // namespace bem
