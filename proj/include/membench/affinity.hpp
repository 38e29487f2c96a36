// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace membench {

// Cores this process may run on (sched_getaffinity), ascending.
std::vector<int> host_cores();

// Throws Error when the core is invalid or the kernel rejects the mask.
void pin_current_thread(int core);

}  // namespace membench
