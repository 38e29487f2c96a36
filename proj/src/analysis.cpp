// SPDX-License-Identifier: Apache-2.0

#include "membench/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "membench/alloc.hpp"
#include "membench/error.hpp"

namespace membench {

Stats summarize(const MeasurementRecord& record) {
    Stats s;
    std::uint64_t sum = 0;
    for (const auto& it : record.iterations) {
        if (it.warmup) continue;
        if (s.count == 0) {
            s.min = s.max = it.elapsed_ns;
        } else {
            s.min = std::min(s.min, it.elapsed_ns);
            s.max = std::max(s.max, it.elapsed_ns);
        }
        sum += it.elapsed_ns;
        ++s.count;
    }
    if (s.count == 0) throw Error("record '" + record.case_id + "' has no measured iterations");
    s.mean = Rational(sum) / Rational(s.count);
    if (s.count > 1) {
        Rational squares = 0;
        for (const auto& it : record.iterations) {
            if (it.warmup) continue;
            Rational d = Rational(it.elapsed_ns) - s.mean;
            squares += d * d;
        }
        s.stdev = std::sqrt(to_double(squares / Rational(s.count - 1)));
    }
    s.derived_value = derive_value(record.kernel, record.iterations);
    s.derived_unit = record.unit;
    return s;
}

Rational fraction(const Rational& achieved, const Rational& bound) {
    if (bound <= 0) throw Error("bound must be positive");
    return achieved / bound;
}

namespace {

std::string memory_for(const PlacementRecord& p, const TopologySpec& spec, const std::string& record_id) {
    const std::string where = "record '" + record_id + "': placement " + p.policy + ": ";
    if (p.degraded) throw Error(where + "allocation was degraded and maps to no topology memory");
    int node = -1;
    if (p.realized_nodes) {
        if (p.realized_nodes->size() != 1) throw Error(where + "pages span " + std::to_string(p.realized_nodes->size()) + " nodes");
        node = p.realized_nodes->front();
    } else {
        PlacementPolicy policy;
        try {
            policy = PlacementPolicy::from_label(p.policy);
        } catch (const Error&) {
            throw Error(where + "unrecognised policy");
        }
        if (policy.kind != PlacementPolicy::Kind::ExplicitNode) {
            throw Error(where + "realized node is unverified");
        }
        node = policy.node;
    }
    const auto* mem = spec.find_memory_by_numa_node(node);
    if (!mem) throw Error(where + "NUMA node " + std::to_string(node) + " is not a memory of topology '" + spec.name + "'");
    return mem->id;
}

}  // namespace

FractionEntry fraction_of_bound(const MeasurementRecord& record, const TopologySpec& spec) {
    const std::string where = "record '" + record.case_id + "': ";
    Op op;
    switch (record.kernel) {
        case KernelKind::Read: op = Op::Read; break;
        case KernelKind::Write: op = Op::Write; break;
        case KernelKind::Copy: op = Op::Copy; break;
        default: throw Error(where + std::string(to_string(record.kernel)) + " is a latency kernel with no bandwidth bound");
    }
    if (!record.initiator) throw Error(where + "no initiator PU recorded");
    const std::size_t needed = op == Op::Copy ? 2 : 1;
    if (record.placements.size() != needed) {
        throw Error(where + "expected " + std::to_string(needed) + " placement(s), found " +
                    std::to_string(record.placements.size()));
    }
    std::uint64_t bytes = 0;
    std::uint64_t elapsed = 0;
    for (const auto& it : record.iterations) {
        if (it.warmup) continue;
        bytes += it.units;
        elapsed += it.elapsed_ns;
    }
    if (elapsed == 0) throw Error(where + "no measured time");

    FractionEntry e;
    e.record_id = record.case_id;
    const std::string src = memory_for(record.placements[0], spec, record.case_id);
    std::optional<std::string> dst;
    if (op == Op::Copy) dst = memory_for(record.placements[1], spec, record.case_id);
    e.model = compute_bound(spec, op, *record.initiator, src, dst);
    e.achieved = Rational(bytes) / Rational(elapsed);
    e.bound = e.model.bound;
    e.fraction = fraction(e.achieved, e.bound);
    if (e.fraction > 1) e.annotation = std::string(kCacheResidentNote);
    return e;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

std::vector<std::uint64_t> detect_breakpoints(const std::vector<LatencySample>& samples, double delta, std::size_t k) {
    if (k == 0) throw Error("breakpoint window must be at least 1");
    if (!(delta > 0)) throw Error("breakpoint threshold must be positive");
    const std::size_t n = samples.size();
    if (n < std::max<std::size_t>(4, 2 * k)) {
        throw Error("breakpoint detection needs at least " + std::to_string(std::max<std::size_t>(4, 2 * k)) +
                    " samples, got " + std::to_string(n));
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (samples[i].size <= samples[i - 1].size) throw Error("samples must be sorted by strictly increasing size");
    }

    const std::size_t first = k - 1;
    const std::size_t last = n - k - 1;
    std::vector<double> ratio(n, 0.0);
    for (std::size_t i = first; i <= last; ++i) {
        std::vector<double> prev, next;
        for (std::size_t j = i + 1 - k; j <= i; ++j) prev.push_back(samples[j].latency);
        for (std::size_t j = i + 1; j <= i + k; ++j) next.push_back(samples[j].latency);
        const double p = median(prev);
        ratio[i] = p > 0 ? median(next) / p : 0.0;
    }

    std::vector<std::uint64_t> out;
    for (std::size_t i = first; i <= last; ++i) {
        const bool rises = i == first || ratio[i] > ratio[i - 1];
        const bool holds = i == last || ratio[i] >= ratio[i + 1];
        if (rises && holds && ratio[i] >= 1.0 + delta) out.push_back(samples[i].size);
    }
    return out;
}

std::vector<LatencySample> latency_curve(const std::vector<MeasurementRecord>& records) {
    std::vector<LatencySample> out;
    for (const auto& r : records) {
        if (r.kernel != KernelKind::Chase) continue;
        out.push_back({r.bytes_per_iteration, r.derived_value});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size < b.size; });
    return out;
}

}  // namespace membench
