// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <string>

namespace membench {

// Nanosecond ticks end-to-end; there is no floating-point time anywhere.
using Tick = std::uint64_t;

struct ClockInfo {
    std::uint64_t frequency_hz = 0;  // 0 when the source only exposes nanoseconds
    Tick resolution_ns = 0;
    std::string source;
};

class Clock {
public:
    virtual ~Clock() = default;
    virtual Tick now() const = 0;
    virtual std::string source() const = 0;
    virtual std::uint64_t frequency_hz() const { return 0; }
};

// CLOCK_MONOTONIC_RAW: one system-wide counter, comparable across cores.
class SteadyClock final : public Clock {
public:
    Tick now() const override;
    std::string source() const override { return "clock_gettime(CLOCK_MONOTONIC_RAW)"; }
};

const Clock& system_clock();

inline Tick now_ns() { return system_clock().now(); }

// Deterministic clock for tests: every read returns the current value and
// then advances it by `step`. A step of 0 gives a frozen clock.
class MockClock final : public Clock {
public:
    explicit MockClock(Tick start = 0, Tick step = 0) : value_(start), step_(step) {}

    Tick now() const override { return value_.fetch_add(step_, std::memory_order_relaxed); }
    std::string source() const override { return "mock"; }

    void set(Tick value) { value_.store(value, std::memory_order_relaxed); }
    void advance(Tick delta) { value_.fetch_add(delta, std::memory_order_relaxed); }
    Tick peek() const { return value_.load(std::memory_order_relaxed); }

private:
    mutable std::atomic<Tick> value_;
    Tick step_;
};

// Minimum positive delta over back-to-back reads. Throws Error when no
// positive delta is seen (frozen clock) or samples < 1000.
ClockInfo estimate_resolution(const Clock& clock, std::size_t samples = 100000);

}  // namespace membench
