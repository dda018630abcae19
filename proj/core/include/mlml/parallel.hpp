#pragma once

#include <cstddef>
#include <functional>

namespace mlml {

/// Worker count from MLML_WORKERS, falling back to hardware concurrency.
std::size_t default_worker_count();

/// Runs task(i) for i in [0, count) on up to `workers` threads. Tasks must
/// write only to their own output slot; results are therefore independent of
/// scheduling. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& task);

}  // namespace mlml
