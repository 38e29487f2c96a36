// SPDX-License-Identifier: Apache-2.0

#include "membench/affinity.hpp"

#include <pthread.h>
#include <sched.h>

#include <cstring>
#include <string>

#include "membench/error.hpp"

namespace membench {

std::vector<int> host_cores() {
    cpu_set_t set;
    CPU_ZERO(&set);
    std::vector<int> cores;
    if (sched_getaffinity(0, sizeof set, &set) != 0) return cores;
    for (int c = 0; c < CPU_SETSIZE; ++c) {
        if (CPU_ISSET(c, &set)) cores.push_back(c);
    }
    return cores;
}

void pin_current_thread(int core) {
    if (core < 0 || core >= CPU_SETSIZE) throw Error("cannot pin to core " + std::to_string(core) + ": out of range");
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(core, &set);
    int rc = pthread_setaffinity_np(pthread_self(), sizeof set, &set);
    if (rc != 0) throw Error("cannot pin to core " + std::to_string(core) + ": " + std::strerror(rc));
}

}  // namespace membench
