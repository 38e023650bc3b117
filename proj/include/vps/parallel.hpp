#pragma once

namespace vps {

// Worker count for all parallel kernels. 0 = hardware concurrency.
// Reductions are ordered by worker index, so results are reproducible for a
// fixed worker count.
void set_num_workers(int n);
int num_workers();

}  // namespace vps
