// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "membench/rational.hpp"

namespace membench {

enum class PuKind { Cpu, Accelerator };
enum class MemoryKind { Ddr, Hbm };
enum class Op { Read, Write, Copy };

std::string_view to_string(PuKind kind);
std::string_view to_string(MemoryKind kind);
std::string_view to_string(Op op);
PuKind parse_pu_kind(std::string_view text);
MemoryKind parse_memory_kind(std::string_view text);
Op parse_op(std::string_view text);

struct Cache {
    int level = 1;
    std::uint64_t size = 0;
    bool shared = false;
};

struct ProcessingUnit {
    std::string id;
    PuKind kind = PuKind::Cpu;
    int socket = 0;
    int core_count = 1;
    std::uint32_t cache_line = 64;
    std::vector<Cache> caches;
};

struct MemoryDomain {
    std::string id;
    MemoryKind kind = MemoryKind::Ddr;
    int socket = 0;
    int numa_node = 0;
    std::uint64_t capacity = 0;
    Rational bandwidth;  // GB/s, shared between reads and writes
    // PU (or "socket:N" port) whose controller serves this memory. A memory
    // attached to a PU is reached from that PU without crossing any link.
    std::optional<std::string> attached_to;
};

struct Link {
    std::string id;
    std::string endpoint_a;
    std::string endpoint_b;
    Rational bandwidth_per_direction;  // GB/s
    std::set<PuKind> allowed_initiators;
    // Free-form marker for values that are not vendor-documented.
    std::optional<std::string> assumption;
};

struct TopologySpec {
    std::string name;
    std::uint64_t page_size = 4096;
    int sockets = 1;
    std::vector<ProcessingUnit> pus;
    std::vector<MemoryDomain> memories;
    std::vector<Link> links;

    const ProcessingUnit* find_pu(std::string_view id) const;
    const MemoryDomain* find_memory(std::string_view id) const;
    const MemoryDomain* find_memory_by_numa_node(int node) const;
    const Link* find_link(std::string_view id) const;
};

// One traversal of a link. Payload moves from `from` to `to`.
struct Hop {
    std::string link;
    std::string from;
    std::string to;

    std::string resource() const;  // "<link>:<from>-><to>"
    friend bool operator==(const Hop&, const Hop&) = default;
};

// Hops are ordered from the memory towards the initiator (read payload direction).
struct Datapath {
    std::string initiator;
    std::string memory;
    std::vector<Hop> hops;
};

struct BoundResult {
    Op op = Op::Read;
    std::string initiator;
    std::string src;
    std::optional<std::string> dst;
    Rational bound;  // GB/s
    std::string limiting_resource;
    std::map<std::string, int> usage_counts;
    std::map<std::string, Rational> capacities;
};

TopologySpec parse_topology(std::string_view text);
TopologySpec load_topology(const std::string& path);
std::string serialize_topology(const TopologySpec& spec);

// Fewest links from `memory` to `pu` over links admitting the PU's kind.
// Ties go to the lexicographically smallest link-id sequence (memory first).
Datapath resolve_datapath(const TopologySpec& spec, std::string_view pu, std::string_view memory);

// For Op::Copy, `dst` is required; `src` is read and `dst` written.
BoundResult compute_bound(const TopologySpec& spec, Op op, std::string_view pu, std::string_view src,
                          const std::optional<std::string>& dst = std::nullopt);

struct BoundCell {
    std::string row;  // src memory (copy) or initiator (read/write)
    std::string column;
    std::optional<BoundResult> result;  // empty when unreachable
    std::string reason;
};

// read/write: 1 x |memories|; copy: |memories| x |memories| (src rows, dst columns).
struct BoundsMatrix {
    Op op = Op::Read;
    std::string initiator;
    std::vector<std::string> rows;
    std::vector<std::string> columns;
    std::vector<std::vector<BoundCell>> cells;
};

BoundsMatrix bounds_matrix(const TopologySpec& spec, Op op, std::string_view initiator);

// SHA-256 over the canonical form; 64 lowercase hex chars.
std::string topology_hash(const TopologySpec& spec);
std::string canonical_topology(const TopologySpec& spec);

}  // namespace membench
