// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "membench/affinity.hpp"
#include "membench/clock.hpp"
#include "membench/error.hpp"

using namespace membench;

TEST_CASE("mock clock steps deterministically") {
    MockClock c(100, 5);
    CHECK(c.now() == 100);
    CHECK(c.now() == 105);
    c.advance(10);
    CHECK(c.peek() == 120);
    c.set(7);
    CHECK(c.now() == 7);
    CHECK(c.source() == "mock");
}

TEST_CASE("resolution estimate") {
    MockClock stepping(0, 3);
    auto info = estimate_resolution(stepping, 1000);
    CHECK(info.resolution_ns == 3);
    CHECK(info.source == "mock");

    MockClock frozen(0, 0);
    CHECK_THROWS_AS(estimate_resolution(frozen, 1000), Error);
    CHECK_THROWS_AS(estimate_resolution(stepping, 10), Error);

    auto sys = estimate_resolution(system_clock());
    CHECK(sys.resolution_ns > 0);
    CHECK(sys.resolution_ns < 1'000'000);
}

TEST_CASE("system clock is monotonic") {
    Tick prev = now_ns();
    for (int i = 0; i < 100000; ++i) {
        Tick t = now_ns();
        REQUIRE(t >= prev);
        prev = t;
    }
}

TEST_CASE("host cores and pinning") {
    auto cores = host_cores();
    REQUIRE_FALSE(cores.empty());
    CHECK_NOTHROW(pin_current_thread(cores.front()));
    CHECK_THROWS_AS(pin_current_thread(100000), Error);
    CHECK_THROWS_AS(pin_current_thread(-1), Error);
}
