#pragma once

#include <cstddef>
#include <functional>

namespace fastmap {

// Worker count for ParallelFor; 0 selects hardware concurrency.
void SetNumThreads(int num_threads);
int NumThreads();

// Calls fn(k) for k in [0, n). Work is split into contiguous blocks; fn must
// only write to slots owned by k, which keeps results independent of the
// thread count.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace fastmap
