#pragma once

#include <cstddef>
#include <functional>

namespace crystclr {

/// Worker count: CRYSTCLR_THREADS if set to a positive integer, otherwise
/// the hardware concurrency.
std::size_t worker_count();

/// Runs fn(0..n-1) across worker_count() threads. Tasks must be independent;
/// if several throw, the exception from the lowest index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace crystclr
