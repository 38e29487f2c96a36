// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "membench/rational.hpp"
#include "membench/records.hpp"
#include "membench/topo.hpp"

namespace membench {

// Per-iteration elapsed time over the non-warmup iterations.
struct Stats {
    std::size_t count = 0;
    Rational mean;  // exact
    Tick min = 0;
    Tick max = 0;
    double stdev = 0.0;  // sample stdev; 0 for a single iteration
    std::string unit = "ns";
    double derived_value = 0.0;
    std::string derived_unit;
};

Stats summarize(const MeasurementRecord& record);

inline constexpr std::string_view kCacheResidentNote = "cache-resident?";

struct FractionEntry {
    std::string record_id;
    Rational achieved;  // GB/s, sum(bytes) / sum(ns) over measured iterations
    Rational bound;     // GB/s
    Rational fraction;  // achieved / bound, never clamped
    BoundResult model;
    std::string annotation;  // kCacheResidentNote when fraction > 1
};

// Exact achieved / bound. Throws Error when bound is not positive.
Rational fraction(const Rational& achieved, const Rational& bound);

// Read/write use the record's single placement as the source; copy maps
// placements {src, dst}. A placement maps to the topology memory whose
// numa_node is the single realized node (or the node of an explicit
// "node:N" policy when realization is unverified). Degraded or multi-node
// placements are not mappable and raise Error.
FractionEntry fraction_of_bound(const MeasurementRecord& record, const TopologySpec& spec);

struct LatencySample {
    std::uint64_t size = 0;  // bytes
    double latency = 0.0;    // ns/access
};

inline constexpr double kDefaultBreakpointDelta = 0.3;
inline constexpr std::size_t kDefaultBreakpointWindow = 2;

// Median-window knee detection. For each i with k points on both sides,
// ratio_i = median(lat[i+1..i+k]) / median(lat[i-k+1..i]). Sizes whose ratio
// is a local maximum (first point of a plateau) and at least 1 + delta are
// returned ascending; size[i] is the last size before the jump. Throws Error
// on fewer than max(4, 2k) samples, unsorted sizes, delta <= 0 or k == 0.
std::vector<std::uint64_t> detect_breakpoints(const std::vector<LatencySample>& samples,
                                              double delta = kDefaultBreakpointDelta,
                                              std::size_t k = kDefaultBreakpointWindow);

// Latency series from chase records, keyed by buffer size, sorted ascending.
std::vector<LatencySample> latency_curve(const std::vector<MeasurementRecord>& records);

}  // namespace membench
