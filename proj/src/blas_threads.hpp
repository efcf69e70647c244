#pragma once

namespace rabigauge::numerics {

// Pins OpenBLAS to one thread on first use; parallelism happens across scan points.
void single_threaded_blas();

}  // namespace rabigauge::numerics
