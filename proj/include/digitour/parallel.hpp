#pragma once

#include <functional>

namespace digitour {

// Worker count: DIGITOUR_THREADS if set and positive, otherwise
// std::thread::hardware_concurrency().
int thread_count();

// Runs body(i) for i in [begin, end) split into contiguous blocks across
// thread_count() workers. body must only write to index-disjoint state, so
// results are identical for any worker count.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace digitour
