#pragma once

#include <functional>

namespace shellforge {

// Number of worker threads: explicit setting > SHELLFORGE_THREADS > hardware.
int thread_count();
void set_thread_count(int n);  // n <= 0 restores the default

// Runs fn(i) for i in [0, n) across the configured workers. fn must only
// write to disjoint state per index; results are identical for any worker
// count.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace shellforge
