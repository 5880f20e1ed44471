#pragma once

#include <cstddef>
#include <functional>

namespace volterra {

// Process-wide worker count for path-parallel loops. Results never depend on
// it: every path owns its RNG stream and reductions run serially afterwards.
void set_worker_count(std::size_t workers);
std::size_t worker_count() noexcept;

// Calls body(begin, end) on contiguous chunks of [0, n). Exceptions thrown by
// a chunk are rethrown on the calling thread (the lowest chunk wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace volterra
