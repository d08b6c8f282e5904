#pragma once

#include <functional>

namespace wkam {

// Worker count: WKAM_WORKERS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
int worker_count();

// Calls body(begin, end) over a partition of [0, n). Chunks are contiguous and
// independent of the worker count, so results never depend on scheduling as
// long as body only writes to its own range.
void parallel_for(int n, const std::function<void(int begin, int end)>& body);

}  // namespace wkam
