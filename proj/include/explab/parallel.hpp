#pragma once

#include <cstddef>
#include <functional>

namespace explab {

/// Worker cap from EXPLAB_THREADS; unset, 0 or invalid means hardware concurrency.
std::size_t worker_count();

/// Calls task(i) for i in [0, count) on up to `threads` workers. Tasks must
/// write only to their own output slot. If tasks throw, the exception of the
/// lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task);

} // namespace explab
