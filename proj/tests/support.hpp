// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "membench/records.hpp"
#include "membench/topo.hpp"

namespace test_support {

using namespace membench;

inline std::string source_path(const std::string& rel) { return std::string(MEMBENCH_SOURCE_DIR) + "/" + rel; }

inline TopologySpec reference_topology() { return load_topology(source_path("topologies/quad_gh200.json")); }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("membench-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// PUs p0..p{n-1}, each with one attached memory m_i; a random spanning tree
// of links plus a few extra links, random rational bandwidths and random
// initiator kinds.
inline TopologySpec random_topology(std::mt19937_64& rng) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    TopologySpec t;
    t.name = "random";
    t.sockets = 1;
    const int n = pick(2, 6);
    for (int i = 0; i < n; ++i) {
        ProcessingUnit pu;
        pu.id = "p" + std::to_string(i);
        pu.kind = pick(0, 1) ? PuKind::Cpu : PuKind::Accelerator;
        t.pus.push_back(pu);
        MemoryDomain m;
        m.id = "m" + std::to_string(i);
        m.kind = pick(0, 1) ? MemoryKind::Ddr : MemoryKind::Hbm;
        m.numa_node = i;
        m.capacity = 1u << 30;
        m.bandwidth = Rational(pick(1, 4000), pick(1, 7));
        m.attached_to = pu.id;
        t.memories.push_back(m);
    }
    int next_link = 0;
    auto add_link = [&](int a, int b) {
        Link l;
        l.id = "l" + std::to_string(next_link++);
        l.endpoint_a = "p" + std::to_string(a);
        l.endpoint_b = "p" + std::to_string(b);
        l.bandwidth_per_direction = Rational(pick(1, 1000), pick(1, 5));
        switch (pick(0, 3)) {
            case 0: l.allowed_initiators = {PuKind::Cpu}; break;
            case 1: l.allowed_initiators = {PuKind::Accelerator}; break;
            default: l.allowed_initiators = {PuKind::Cpu, PuKind::Accelerator};
        }
        t.links.push_back(l);
    };
    for (int i = 1; i < n; ++i) add_link(pick(0, i - 1), i);
    const int extra = pick(0, n);
    for (int e = 0; e < extra; ++e) {
        int a = pick(0, n - 1), b = pick(0, n - 1);
        if (a != b) add_link(a, b);
    }
    // Link ids in shuffled order so id order differs from insertion order.
    std::vector<std::string> ids;
    for (const auto& l : t.links) ids.push_back(l.id);
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t i = 0; i < ids.size(); ++i) t.links[i].id = "x" + std::to_string(100 + std::stoi(ids[i].substr(1)));
    return t;
}

// Exhaustive simple-path enumeration: the fewest-hop admissible path from the
// memory to the PU, ties broken by the lexicographically smallest link-id
// sequence. nullopt when unreachable.
inline std::optional<std::vector<Hop>> oracle_path(const TopologySpec& spec, const std::string& pu_id,
                                                   const std::string& mem_id) {
    const auto* pu = spec.find_pu(pu_id);
    const auto* mem = spec.find_memory(mem_id);
    auto node_of = [&](const std::string& ref) {
        if (const auto* m = spec.find_memory(ref)) return m->attached_to.value_or(m->id);
        return ref;
    };
    const std::string start = node_of(mem->id);
    std::optional<std::vector<Hop>> best;
    std::vector<Hop> cur;
    std::set<std::string> visited{start};
    auto better = [](const std::vector<Hop>& a, const std::vector<Hop>& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].link != b[i].link) return a[i].link < b[i].link;
        }
        return false;
    };
    std::function<void(const std::string&)> dfs = [&](const std::string& node) {
        if (node == pu->id) {
            if (!best || better(cur, *best)) best = cur;
            return;
        }
        for (const auto& l : spec.links) {
            if (!l.allowed_initiators.contains(pu->kind)) continue;
            for (int dir = 0; dir < 2; ++dir) {
                const std::string& from = dir ? l.endpoint_b : l.endpoint_a;
                const std::string& to = dir ? l.endpoint_a : l.endpoint_b;
                if (node_of(from) != node || visited.contains(node_of(to))) continue;
                visited.insert(node_of(to));
                cur.push_back({l.id, from, to});
                dfs(node_of(to));
                cur.pop_back();
                visited.erase(node_of(to));
            }
        }
    };
    dfs(start);
    return best;
}

inline MeasurementRecord fixture_record(std::mt19937_64& rng, int i) {
    MeasurementRecord r;
    r.case_id = "case-" + std::to_string(i) + (i % 7 == 0 ? ", with \"quotes\"" : "");
    r.kernel = static_cast<KernelKind>(i % 5);
    r.cores = {i % 4, 4 + i % 3};
    r.workers = 2;
    r.placements = {{i % 2 ? "interleave:0,1" : "node:0", 1u << (10 + i % 12), std::vector<int>{0}, false, {}}};
    const int iters = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < iters; ++k) r.iterations.push_back({1 + rng() % 1000000, 1u << 20, k == 0 && iters > 1});
    r.bytes_per_iteration = 1u << (10 + i % 12);
    r.unit = std::string(unit_for(r.kernel));
    r.derived_value = static_cast<double>(rng() % 100000) / 7.0;
    r.topology_hash = "abc";
    r.timestamp = "2026-01-01T00:00:00Z";
    r.version = "0.1.0";
    return r;
}

// Deterministic synthetic records covering every kernel, quoting and warmup.
inline std::vector<MeasurementRecord> record_fixture(std::size_t n) {
    std::mt19937_64 rng(99);
    std::vector<MeasurementRecord> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(fixture_record(rng, static_cast<int>(i)));
    return out;
}

}  // namespace test_support
