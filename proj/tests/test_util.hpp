// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "isac/parallel.hpp"

namespace testutil {

// Runs f with a fixed worker count and restores the default afterwards.
template <typename F>
auto with_workers(int n, F&& f) {
  isac::set_worker_count(n);
  struct Reset {
    ~Reset() { isac::set_worker_count(0); }
  } reset;
  return f();
}

}  // namespace testutil
