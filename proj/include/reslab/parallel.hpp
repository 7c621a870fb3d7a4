#pragma once

#include <functional>

namespace reslab {

// Runs fn(i) for i in [0, n) across up to n_threads threads; n_threads <= 1
// runs inline. fn must be safe to call concurrently for distinct i.
void parallel_for(int n, int n_threads, const std::function<void(int)>& fn);

// requested > 0 wins; otherwise RESONANCE_LAB_THREADS; otherwise the
// hardware concurrency, clamped to [1, 64].
int resolve_thread_count(int requested);

}  // namespace reslab
