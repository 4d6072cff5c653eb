#pragma once

#include <cstddef>
#include <functional>

namespace corpusdrift {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Blocks until all
// tasks finish; the first exception thrown by any task is rethrown on the
// calling thread after the pool drains. workers <= 1 runs inline.
//
// Callers own output placement (typically an indexed slot per task), which
// keeps results independent of scheduling order.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

unsigned default_parallelism();

}  // namespace corpusdrift
