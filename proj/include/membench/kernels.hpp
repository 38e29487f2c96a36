// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>

#include "membench/clock.hpp"

namespace membench {

// Every kernel moves data in 16-byte accesses (two 64-bit words per
// instruction where the ISA allows). Records carry this width.
inline constexpr std::size_t kAccessWidth = 16;

struct KernelResult {
    std::uint64_t bytes_moved = 0;
    std::uint64_t checksum = 0;  // must be consumed by the caller
    Tick elapsed_ns = 0;         // set by the harness, except chase and ping-pong
    std::uint64_t accesses = 0;  // chase loads, ping-pong swaps
};

// XOR of every little-endian 64-bit word loaded, over all repetitions. A
// trailing partial word is zero-padded.
KernelResult kernel_read(std::span<const std::byte> range, std::size_t repetitions = 1);

struct Pattern16 {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
};

// One 16-byte store at every multiple of `stride_bytes` that fits in the
// range (stride 16 is dense). The last store is read back; its low word is
// returned as the checksum.
KernelResult kernel_write(std::span<std::byte> range, std::size_t stride_bytes, Pattern16 pattern);

// Four independent 16-byte load/store pairs per iteration (one cache line).
KernelResult kernel_copy(std::span<const std::byte> src, std::span<std::byte> dst);

// One load/store pair per iteration; the baseline for the pipelining check.
KernelResult kernel_copy_single_pair(std::span<const std::byte> src, std::span<std::byte> dst);

// Random single-cycle permutation stored in place: slot i, at byte offset
// i * stride, holds the index of its successor as a 64-bit word.
class ChaseBuffer {
public:
    ChaseBuffer(std::span<std::byte> storage, std::size_t slots, std::size_t stride, std::uint64_t seed)
        : storage_(storage), slots_(slots), stride_(stride), seed_(seed) {}

    std::size_t slots() const { return slots_; }
    std::size_t stride() const { return stride_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t start_index() const { return 0; }
    const std::byte* base() const { return storage_.data(); }

    std::uint64_t successor(std::size_t slot) const;

private:
    std::span<std::byte> storage_;
    std::size_t slots_;
    std::size_t stride_;
    std::uint64_t seed_;
};

// Sattolo's algorithm over floor(len / stride) slots; deterministic in
// (slots, seed). Throws Error when fewer than two slots fit or the stride
// cannot hold an index.
ChaseBuffer build_chase(std::span<std::byte> buffer, std::size_t stride_bytes, std::uint64_t seed);

inline constexpr Tick kDefaultChaseDuration = 2'500'000'000;
inline constexpr std::uint64_t kDefaultChaseGranularity = 200;

// Dependent loads in batches of `granularity`; the clock is read after each
// batch and the loop stops at the first read past the duration. Fills
// elapsed_ns and accesses; the final index is the checksum.
KernelResult kernel_chase(const ChaseBuffer& chase, Tick duration_ns = kDefaultChaseDuration,
                          std::uint64_t granularity = kDefaultChaseGranularity,
                          const Clock& clock = system_clock());

enum class PingPongRole { Ping, Pong };

inline constexpr std::uint8_t kPingValue = 1;
inline constexpr std::uint8_t kPongValue = 2;
// One flag byte at offset 0 of a region two cache lines long.
inline constexpr std::size_t kPingPongRegion = 128;

void init_pingpong_flag(std::span<std::byte> region);
std::uint8_t pingpong_flag(std::span<const std::byte> region);

// Ping swaps PONG->PING, pong swaps PING->PONG, each `rounds` times.
// elapsed_ns runs from this side's first successful swap to its last, so the
// ping side spans rounds - 1 full exchanges. Throws TimeoutError if the
// partner does not answer within `first_exchange_deadline_ns` (checked on
// every wait, so a partner that disappears mid-run also times out).
KernelResult kernel_pingpong(std::span<std::byte> flag_region, PingPongRole role, std::uint64_t rounds,
                             const Clock& clock = system_clock(),
                             Tick first_exchange_deadline_ns = 5'000'000'000);

inline constexpr std::size_t kDefaultNoiseBytes = std::size_t{8} << 30;

struct NoiseToken {
    std::atomic<bool> cancel{false};
    std::atomic<std::uint64_t> bytes_read{0};
};

// Reads `buffer` in chunks until cancelled; cancellation is checked between
// chunks. Returns the total bytes read (also published in the token).
std::uint64_t kernel_noise(std::span<const std::byte> buffer, NoiseToken& token);

}  // namespace membench
