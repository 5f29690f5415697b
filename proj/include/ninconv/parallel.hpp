#pragma once

#include <functional>

namespace ninconv {

// Worker count: hardware concurrency capped by NINCONV_THREADS when set.
int thread_count();

// Runs body(i) for i in [0, count). Iterations must write disjoint outputs;
// callers that reduce do so afterwards in index order, so results do not
// depend on the thread count.
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace ninconv
