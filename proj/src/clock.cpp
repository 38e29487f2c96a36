// SPDX-License-Identifier: Apache-2.0

#include "membench/clock.hpp"

#include <time.h>

#include <limits>

#include "membench/error.hpp"

namespace membench {

Tick SteadyClock::now() const {
    timespec ts;
    clock_gettime(CLOCK_MONOTONIC_RAW, &ts);
    return static_cast<Tick>(ts.tv_sec) * 1'000'000'000ull + static_cast<Tick>(ts.tv_nsec);
}

const Clock& system_clock() {
    static const SteadyClock clock;
    return clock;
}

ClockInfo estimate_resolution(const Clock& clock, std::size_t samples) {
    if (samples < 1000) throw Error("estimate_resolution needs at least 1000 samples");
    Tick best = std::numeric_limits<Tick>::max();
    Tick previous = clock.now();
    for (std::size_t i = 0; i < samples; ++i) {
        Tick current = clock.now();
        if (current > previous) best = std::min(best, current - previous);
        previous = current;
    }
    if (best == std::numeric_limits<Tick>::max()) {
        throw Error("clock '" + clock.source() + "' showed no positive delta in " + std::to_string(samples) + " reads");
    }
    return {clock.frequency_hz(), best, clock.source()};
}

}  // namespace membench
