#pragma once

namespace arvae {

// Caps worker threads (Eigen GEMM). Determinism mode pins this to 1 so runs
// reproduce bit for bit regardless of the host.
void set_max_threads(int n);
int max_threads();

}  // namespace arvae
