#pragma once

#include <cstddef>
#include <functional>

namespace hpa {

/// Worker-count hint used by data-parallel loops. 0 means hardware concurrency.
void set_worker_count(unsigned n);
unsigned worker_count();

/// Runs body(i) for i in [0, n) across the configured workers. Iterations must be
/// independent. The first exception thrown by any iteration is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hpa
