// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace isac {

// Worker count from ISAC_WORKERS, else hardware concurrency. Always >= 1.
int worker_count();
void set_worker_count(int n);  // 0 restores the environment default

// Runs fn(i) for i in [0, n). Each index writes only its own output slot, so
// results are identical for any worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace isac
