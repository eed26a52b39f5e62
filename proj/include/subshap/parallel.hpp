#pragma once

#include <functional>

namespace subshap {

// Hardware concurrency with a floor of 1.
int default_jobs();

// Runs fn(i) for every i in [0, n) on up to `jobs` threads (jobs <= 1 runs
// inline). Work items must be independent; determinism is the caller's
// responsibility and is usually obtained by writing only to slot i. The first
// exception thrown by any item is rethrown on the calling thread after all
// workers finish.
void parallel_for(long n, int jobs, const std::function<void(long)>& fn);

}  // namespace subshap
