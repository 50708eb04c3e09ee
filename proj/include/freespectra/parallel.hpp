#pragma once

#include <cstddef>
#include <functional>

namespace fsp {

// Requested thread count, with values <= 0 meaning "all hardware threads".
int resolve_threads(int requested);

// Runs body(0..count-1) on up to `threads` workers. Work items are handed
// out dynamically, so the body must not depend on which worker runs it. The
// first exception thrown by any item is rethrown after all workers stop.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace fsp
