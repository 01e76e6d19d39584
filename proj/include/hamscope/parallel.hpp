// parallel.hpp — Minimal worker pool for embarrassingly parallel loops.
#pragma once

#include <cstddef>
#include <functional>

namespace hamscope {

// Runs body(0) .. body(count - 1), distributing indices over up to
// max_threads workers (hardware concurrency when 0). Results must be written
// to preallocated, per-index storage by the caller so that the outcome does
// not depend on scheduling. The first exception thrown by any index is
// rethrown after all workers have finished.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t)>& body,
                  unsigned max_threads = 0);

}  // namespace hamscope
