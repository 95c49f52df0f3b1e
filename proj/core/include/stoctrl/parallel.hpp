#pragma once

#include <functional>

namespace stoctrl {

/// Caps the number of worker threads used by parallel_for. 0 restores
/// the hardware default.
void set_max_workers(int workers);
int max_workers();

/// Runs body(i) for i in [begin, end) on a static block partition.
/// Each index is processed exactly once and writes only to its own slots,
/// so results are bitwise identical for any worker count. If several
/// iterations throw, the exception of the smallest index is rethrown.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace stoctrl
