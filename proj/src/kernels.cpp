// SPDX-License-Identifier: Apache-2.0

#include "membench/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <random>
#include <thread>

#if defined(__x86_64__) || defined(_M_X64)
#include <emmintrin.h>
#define MEMBENCH_SSE2 1
#elif defined(__aarch64__)
#include <arm_neon.h>
#define MEMBENCH_NEON 1
#endif

#include "membench/error.hpp"

#define MEMBENCH_NOINLINE __attribute__((noinline))

namespace membench {

namespace {

// Two 64-bit lanes. Maps to one SSE2/NEON register, or a pair of GPRs.
#if MEMBENCH_SSE2
using Vec = __m128i;
inline Vec load16(const std::byte* p) { return _mm_loadu_si128(reinterpret_cast<const __m128i*>(p)); }
inline void store16(std::byte* p, Vec v) { _mm_storeu_si128(reinterpret_cast<__m128i*>(p), v); }
inline Vec vxor(Vec a, Vec b) { return _mm_xor_si128(a, b); }
inline Vec vzero() { return _mm_setzero_si128(); }
inline Vec make(std::uint64_t lo, std::uint64_t hi) {
    return _mm_set_epi64x(static_cast<long long>(hi), static_cast<long long>(lo));
}
inline std::uint64_t fold(Vec v) {
    alignas(16) std::uint64_t w[2];
    _mm_store_si128(reinterpret_cast<__m128i*>(w), v);
    return w[0] ^ w[1];
}
#elif MEMBENCH_NEON
using Vec = uint64x2_t;
inline Vec load16(const std::byte* p) { return vld1q_u64(reinterpret_cast<const std::uint64_t*>(p)); }
inline void store16(std::byte* p, Vec v) { vst1q_u64(reinterpret_cast<std::uint64_t*>(p), v); }
inline Vec vxor(Vec a, Vec b) { return veorq_u64(a, b); }
inline Vec vzero() { return vdupq_n_u64(0); }
inline Vec make(std::uint64_t lo, std::uint64_t hi) { return vcombine_u64(vcreate_u64(lo), vcreate_u64(hi)); }
inline std::uint64_t fold(Vec v) { return vgetq_lane_u64(v, 0) ^ vgetq_lane_u64(v, 1); }
#else
struct Vec {
    std::uint64_t lo, hi;
};
inline Vec load16(const std::byte* p) {
    Vec v;
    std::memcpy(&v, p, 16);
    return v;
}
inline void store16(std::byte* p, Vec v) { std::memcpy(p, &v, 16); }
inline Vec vxor(Vec a, Vec b) { return {a.lo ^ b.lo, a.hi ^ b.hi}; }
inline Vec vzero() { return {0, 0}; }
inline Vec make(std::uint64_t lo, std::uint64_t hi) { return {lo, hi}; }
inline std::uint64_t fold(Vec v) { return v.lo ^ v.hi; }
#endif

inline std::uint64_t load_word(const std::byte* p) {
    std::uint64_t w;
    std::memcpy(&w, p, sizeof w);
    return w;
}

MEMBENCH_NOINLINE std::uint64_t read_pass(const std::byte* p, std::size_t n) {
    Vec a0 = vzero(), a1 = vzero(), a2 = vzero(), a3 = vzero();
    std::size_t i = 0;
    for (; i + 64 <= n; i += 64) {
        a0 = vxor(a0, load16(p + i));
        a1 = vxor(a1, load16(p + i + 16));
        a2 = vxor(a2, load16(p + i + 32));
        a3 = vxor(a3, load16(p + i + 48));
    }
    for (; i + 16 <= n; i += 16) a0 = vxor(a0, load16(p + i));
    std::uint64_t sum = fold(vxor(vxor(a0, a1), vxor(a2, a3)));
    for (; i + 8 <= n; i += 8) sum ^= load_word(p + i);
    if (i < n) {
        std::uint64_t tail = 0;
        std::memcpy(&tail, p + i, n - i);
        sum ^= tail;
    }
    return sum;
}

// Bounded uniform draw by rejection; std::uniform_int_distribution is not
// portable across standard libraries and chase layouts must be.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

}  // namespace

KernelResult kernel_read(std::span<const std::byte> range, std::size_t repetitions) {
    KernelResult r;
    for (std::size_t rep = 0; rep < repetitions; ++rep) r.checksum ^= read_pass(range.data(), range.size());
    r.bytes_moved = static_cast<std::uint64_t>(range.size()) * repetitions;
    return r;
}

MEMBENCH_NOINLINE KernelResult kernel_write(std::span<std::byte> range, std::size_t stride_bytes, Pattern16 pattern) {
    if (stride_bytes == 0 || stride_bytes % kAccessWidth != 0) {
        throw Error("write stride " + std::to_string(stride_bytes) + " is not a multiple of 16");
    }
    KernelResult r;
    if (range.size() < kAccessWidth) return r;
    const Vec v = make(pattern.lo, pattern.hi);
    std::byte* p = range.data();
    const std::size_t last = range.size() - kAccessWidth;
    std::uint64_t stores = 0;
    if (stride_bytes == kAccessWidth) {
        std::size_t i = 0;
        for (; i + 64 <= range.size(); i += 64) {
            store16(p + i, v);
            store16(p + i + 16, v);
            store16(p + i + 32, v);
            store16(p + i + 48, v);
        }
        for (; i <= last; i += 16) store16(p + i, v);
        stores = last / kAccessWidth + 1;
    } else {
        for (std::size_t off = 0; off <= last; off += stride_bytes) {
            store16(p + off, v);
            ++stores;
        }
    }
    const std::size_t sampled = (stores - 1) * stride_bytes;
    r.checksum = *reinterpret_cast<const volatile std::uint64_t*>(p + sampled);
    if (r.checksum != pattern.lo) throw Error("write read-back mismatch");
    r.bytes_moved = stores * kAccessWidth;
    return r;
}

MEMBENCH_NOINLINE KernelResult kernel_copy(std::span<const std::byte> src, std::span<std::byte> dst) {
    if (src.size() != dst.size()) {
        throw Error("copy length mismatch: " + std::to_string(src.size()) + " vs " + std::to_string(dst.size()));
    }
    const std::byte* s = src.data();
    std::byte* d = dst.data();
    const std::size_t n = src.size();
    std::size_t i = 0;
    for (; i + 64 <= n; i += 64) {
        Vec a = load16(s + i);
        Vec b = load16(s + i + 16);
        Vec c = load16(s + i + 32);
        Vec e = load16(s + i + 48);
        store16(d + i, a);
        store16(d + i + 16, b);
        store16(d + i + 32, c);
        store16(d + i + 48, e);
    }
    if (i < n) std::memcpy(d + i, s + i, n - i);
    return {n, 0, 0, 0};
}

MEMBENCH_NOINLINE KernelResult kernel_copy_single_pair(std::span<const std::byte> src, std::span<std::byte> dst) {
    if (src.size() != dst.size()) {
        throw Error("copy length mismatch: " + std::to_string(src.size()) + " vs " + std::to_string(dst.size()));
    }
    const std::byte* s = src.data();
    std::byte* d = dst.data();
    const std::size_t n = src.size();
    std::size_t i = 0;
#pragma GCC unroll 1
    for (; i + 16 <= n; i += 16) {
        store16(d + i, load16(s + i));
        asm volatile("" ::: "memory");
    }
    if (i < n) std::memcpy(d + i, s + i, n - i);
    return {n, 0, 0, 0};
}

std::uint64_t ChaseBuffer::successor(std::size_t slot) const { return load_word(storage_.data() + slot * stride_); }

ChaseBuffer build_chase(std::span<std::byte> buffer, std::size_t stride_bytes, std::uint64_t seed) {
    if (stride_bytes < sizeof(std::uint64_t) || stride_bytes % sizeof(std::uint64_t) != 0) {
        throw Error("chase stride " + std::to_string(stride_bytes) + " cannot hold a 64-bit index");
    }
    const std::size_t slots = buffer.size() / stride_bytes;
    if (slots < 2) throw Error("chase needs at least 2 slots, buffer holds " + std::to_string(slots));

    std::vector<std::uint64_t> next(slots);
    for (std::size_t i = 0; i < slots; ++i) next[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = slots - 1; i > 0; --i) {
        std::swap(next[i], next[uniform_below(rng, i)]);
    }
    for (std::size_t i = 0; i < slots; ++i) std::memcpy(buffer.data() + i * stride_bytes, &next[i], sizeof(std::uint64_t));
    return ChaseBuffer(buffer, slots, stride_bytes, seed);
}

MEMBENCH_NOINLINE KernelResult kernel_chase(const ChaseBuffer& chase, Tick duration_ns, std::uint64_t granularity,
                                            const Clock& clock) {
    if (granularity == 0) throw Error("chase granularity must be at least 1");
    const std::byte* base = chase.base();
    const std::size_t stride = chase.stride();
    std::uint64_t index = chase.start_index();
    std::uint64_t accesses = 0;
    const Tick start = clock.now();
    const Tick deadline = start + duration_ns;
    Tick now;
    do {
        for (std::uint64_t g = 0; g < granularity; ++g) index = load_word(base + index * stride);
        accesses += granularity;
        now = clock.now();
    } while (now < deadline);
    KernelResult r;
    r.accesses = accesses;
    r.elapsed_ns = now - start;
    r.checksum = index;
    r.bytes_moved = accesses * sizeof(std::uint64_t);
    return r;
}

void init_pingpong_flag(std::span<std::byte> region) {
    if (region.size() < kPingPongRegion) throw Error("ping-pong region must span two cache lines");
    std::memset(region.data(), 0, kPingPongRegion);
    std::atomic_ref<std::uint8_t>(*reinterpret_cast<std::uint8_t*>(region.data())).store(kPongValue);
}

std::uint8_t pingpong_flag(std::span<const std::byte> region) {
    return std::atomic_ref<std::uint8_t>(*const_cast<std::uint8_t*>(reinterpret_cast<const std::uint8_t*>(region.data())))
        .load();
}

KernelResult kernel_pingpong(std::span<std::byte> flag_region, PingPongRole role, std::uint64_t rounds,
                             const Clock& clock, Tick first_exchange_deadline_ns) {
    if (flag_region.size() < kPingPongRegion) throw Error("ping-pong region must span two cache lines");
    KernelResult r;
    if (rounds == 0) return r;

    std::atomic_ref<std::uint8_t> flag(*reinterpret_cast<std::uint8_t*>(flag_region.data()));
    const std::uint8_t expect = role == PingPongRole::Ping ? kPongValue : kPingValue;
    const std::uint8_t desired = role == PingPongRole::Ping ? kPingValue : kPongValue;

    // Plain CAS spin; yields only after a long run of failures so that two
    // workers sharing one core still make progress.
    auto swap_once = [&] {
        const Tick deadline = clock.now() + first_exchange_deadline_ns;
        std::uint64_t failures = 0;
        for (;;) {
            std::uint8_t e = expect;
            if (flag.compare_exchange_strong(e, desired, std::memory_order_seq_cst)) return;
            ++failures;
            if ((failures & 0xfff) == 0) {
                if (clock.now() >= deadline) {
                    throw TimeoutError("ping-pong partner did not respond within " +
                                       std::to_string(first_exchange_deadline_ns) + " ns");
                }
                std::this_thread::yield();
            }
        }
    };

    swap_once();
    const Tick start = clock.now();
    for (std::uint64_t i = 1; i < rounds; ++i) swap_once();
    const Tick end = clock.now();

    r.accesses = rounds;
    r.checksum = rounds;
    r.elapsed_ns = end - start;
    return r;
}

std::uint64_t kernel_noise(std::span<const std::byte> buffer, NoiseToken& token) {
    constexpr std::size_t kChunk = std::size_t{1} << 20;
    std::uint64_t total = 0;
    std::uint64_t checksum = 0;
    while (!buffer.empty()) {
        for (std::size_t off = 0; off < buffer.size(); off += kChunk) {
            if (token.cancel.load(std::memory_order_relaxed)) {
                asm volatile("" : : "r"(checksum));
                return total;
            }
            auto chunk = buffer.subspan(off, std::min(kChunk, buffer.size() - off));
            checksum ^= kernel_read(chunk).checksum;
            total += chunk.size();
            token.bytes_read.store(total, std::memory_order_relaxed);
        }
    }
    return total;
}

}  // namespace membench
