#pragma once

#include <cstddef>
#include <functional>

namespace fas {

// Worker count used when a caller passes threads = 0.
unsigned default_threads() noexcept;

// Runs body(i) for i in [0, chunks) on up to `threads` workers. Chunks are
// handed out in order; the first exception thrown by any chunk is rethrown
// after all workers stop. Callers merge per-chunk results themselves, so the
// outcome does not depend on the thread count.
void parallel_for(std::size_t chunks, const std::function<void(std::size_t)>& body, unsigned threads = 0);

}  // namespace fas
