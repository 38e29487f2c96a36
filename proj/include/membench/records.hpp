// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "membench/clock.hpp"

namespace membench {

enum class KernelKind { Read, Write, Copy, Chase, PingPong };

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view text);

// Bandwidth kernels report GB/s; chase and ping-pong report latency.
bool is_latency_kernel(KernelKind kind);
std::string_view unit_for(KernelKind kind);

struct IterationSample {
    Tick elapsed_ns = 0;
    std::uint64_t units = 0;  // bytes, chase accesses, or ping-pong exchanges
    bool warmup = false;

    friend bool operator==(const IterationSample&, const IterationSample&) = default;
};

struct PlacementRecord {
    std::string policy;  // PlacementPolicy::label()
    std::uint64_t length = 0;
    std::optional<std::vector<int>> realized_nodes;  // nullopt = unverified
    bool degraded = false;
    std::vector<std::string> notes;

    friend bool operator==(const PlacementRecord&, const PlacementRecord&) = default;
};

struct NoiseRecord {
    std::vector<int> cores;
    std::uint64_t length = 0;
    std::string policy;
    std::uint64_t bytes_read = 0;

    friend bool operator==(const NoiseRecord&, const NoiseRecord&) = default;
};

struct MeasurementRecord {
    std::string case_id;
    KernelKind kernel = KernelKind::Read;
    std::vector<int> cores;
    std::uint64_t workers = 0;
    std::optional<std::string> initiator;  // topology PU the cores belong to
    std::vector<PlacementRecord> placements;
    std::vector<IterationSample> iterations;
    std::uint64_t bytes_per_iteration = 0;  // buffer bytes the case touches per iteration
    std::string unit;
    double derived_value = 0.0;
    ClockInfo clock;
    std::string topology_hash;
    Tick start_skew_ns = 0;
    std::string timestamp;
    std::string version;
    std::uint64_t access_width = 0;
    bool pinned = true;
    std::optional<NoiseRecord> noise;
    std::uint64_t checksum = 0;
};

// Sum of units over sum of elapsed for throughput kernels (bytes per ns is
// GB/s), the inverse for latency kernels. Warmup iterations excluded.
// Throws Error when no measured iteration is present.
double derive_value(KernelKind kind, const std::vector<IterationSample>& iterations);

// One compact JSON object per record, keys sorted; stable under re-parse.
std::string to_json_line(const MeasurementRecord& record);
MeasurementRecord parse_record(std::string_view json_line);

// JSON-lines documents; blank lines are skipped.
std::vector<MeasurementRecord> parse_records(std::string_view text);
std::vector<MeasurementRecord> load_records(const std::string& path);

std::string toolkit_version();
std::string utc_timestamp();

}  // namespace membench
