#pragma once

#include <cstddef>
#include <functional>

namespace adt {

/// Worker count resolution: explicit request > ADT_THREADS env var > hardware.
int resolve_threads(int requested = 0);

/// Run body(i) for i in [0, n). Work items must be independent and write only
/// to their own slots; the loop is deterministic for any worker count.
/// Exceptions thrown by work items are collected and the first is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  int threads = 0);

}  // namespace adt
