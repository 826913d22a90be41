#pragma once

#include <cstddef>
#include <functional>

namespace udavi {

// Worker cap: UDAVI_THREADS when set, else hardware concurrency.
int worker_count();

// Runs fn(i) for i in [0, n). Work units must be independent and write only
// their own slots; chunking is static so results are identical for any worker
// count.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace udavi
