// SPDX-License-Identifier: Apache-2.0

#include "membench/topo.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "membench/error.hpp"

namespace membench {

using nlohmann::json;

TopologyError::TopologyError(std::vector<std::string> issues)
    : Error([&] {
          std::string msg = "invalid topology:";
          for (const auto& issue : issues) msg += " " + issue + ";";
          if (!issues.empty()) msg.pop_back();
          return msg;
      }()),
      issues_(std::move(issues)) {}

std::string_view to_string(PuKind kind) { return kind == PuKind::Cpu ? "cpu" : "accelerator"; }
std::string_view to_string(MemoryKind kind) { return kind == MemoryKind::Ddr ? "ddr" : "hbm"; }

std::string_view to_string(Op op) {
    switch (op) {
        case Op::Read: return "read";
        case Op::Write: return "write";
        case Op::Copy: return "copy";
    }
    return "?";
}

PuKind parse_pu_kind(std::string_view text) {
    if (text == "cpu") return PuKind::Cpu;
    if (text == "accelerator") return PuKind::Accelerator;
    throw Error("unknown PU kind '" + std::string(text) + "'");
}

MemoryKind parse_memory_kind(std::string_view text) {
    if (text == "ddr") return MemoryKind::Ddr;
    if (text == "hbm") return MemoryKind::Hbm;
    throw Error("unknown memory kind '" + std::string(text) + "'");
}

Op parse_op(std::string_view text) {
    if (text == "read") return Op::Read;
    if (text == "write") return Op::Write;
    if (text == "copy") return Op::Copy;
    throw Error("unknown op '" + std::string(text) + "'");
}

const ProcessingUnit* TopologySpec::find_pu(std::string_view id) const {
    auto it = std::find_if(pus.begin(), pus.end(), [&](const auto& p) { return p.id == id; });
    return it == pus.end() ? nullptr : &*it;
}

const MemoryDomain* TopologySpec::find_memory(std::string_view id) const {
    auto it = std::find_if(memories.begin(), memories.end(), [&](const auto& m) { return m.id == id; });
    return it == memories.end() ? nullptr : &*it;
}

const MemoryDomain* TopologySpec::find_memory_by_numa_node(int node) const {
    auto it = std::find_if(memories.begin(), memories.end(),
                           [&](const auto& m) { return m.numa_node == node; });
    return it == memories.end() ? nullptr : &*it;
}

const Link* TopologySpec::find_link(std::string_view id) const {
    auto it = std::find_if(links.begin(), links.end(), [&](const auto& l) { return l.id == id; });
    return it == links.end() ? nullptr : &*it;
}

std::string Hop::resource() const { return link + ":" + from + "->" + to; }

namespace {

constexpr std::string_view kSocketPrefix = "socket:";

bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::optional<int> socket_port_index(std::string_view ref) {
    if (!ref.starts_with(kSocketPrefix)) return std::nullopt;
    auto digits = ref.substr(kSocketPrefix.size());
    int value = -1;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || value < 0) return std::nullopt;
    return value;
}

// Collects issues while walking the document so one run reports all of them.
class Reader {
public:
    std::vector<std::string> issues;

    template <typename T>
    std::optional<T> field(const json& obj, const char* key, const std::string& where, bool required = true) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) issues.push_back(where + ": missing '" + key + "'");
            return std::nullopt;
        }
        try {
            return it->get<T>();
        } catch (const json::exception&) {
            issues.push_back(where + ": '" + key + "' has the wrong type");
            return std::nullopt;
        }
    }

    std::optional<Rational> bandwidth(const json& obj, const char* key, const std::string& where) {
        auto it = obj.find(key);
        if (it == obj.end()) {
            issues.push_back(where + ": missing '" + key + "'");
            return std::nullopt;
        }
        try {
            Rational value;
            if (it->is_number_integer()) {
                value = Rational(it->get<std::int64_t>());
            } else if (it->is_number_float()) {
                // Shortest round-trip form recovers the literal the author wrote.
                char buf[64];
                auto res = std::to_chars(buf, buf + sizeof buf, it->get<double>());
                value = parse_rational(std::string_view(buf, res.ptr - buf));
            } else if (it->is_string()) {
                value = parse_rational(it->get<std::string>());
            } else {
                issues.push_back(where + ": '" + key + "' is not a number");
                return std::nullopt;
            }
            if (value <= 0) {
                issues.push_back(where + ": non-positive bandwidth " + to_string(value));
                return std::nullopt;
            }
            return value;
        } catch (const std::invalid_argument& e) {
            issues.push_back(where + ": " + e.what());
            return std::nullopt;
        }
    }
};

}  // namespace

TopologySpec parse_topology(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw TopologyError({std::string("malformed document: ") + e.what()});
    }
    if (!doc.is_object()) throw TopologyError({"malformed document: top level is not an object"});

    Reader rd;
    TopologySpec spec;
    spec.name = rd.field<std::string>(doc, "name", "topology").value_or("");
    if (auto ps = rd.field<std::uint64_t>(doc, "page_size", "topology")) {
        spec.page_size = *ps;
        if (!is_power_of_two(*ps)) rd.issues.push_back("topology: page_size " + std::to_string(*ps) + " is not a power of two");
    }
    std::optional<int> declared_sockets = rd.field<int>(doc, "sockets", "topology", false);

    for (const char* key : {"pus", "memories", "links"}) {
        auto it = doc.find(key);
        if (it == doc.end()) {
            rd.issues.push_back(std::string("topology: missing '") + key + "'");
        } else if (!it->is_array()) {
            rd.issues.push_back(std::string("topology: '") + key + "' is not a list");
        }
    }
    auto list = [&](const char* key) -> json {
        auto it = doc.find(key);
        return (it != doc.end() && it->is_array()) ? *it : json::array();
    };

    for (const auto& item : list("pus")) {
        ProcessingUnit pu;
        pu.id = rd.field<std::string>(item, "id", "pu").value_or("");
        std::string where = "pu '" + pu.id + "'";
        if (auto kind = rd.field<std::string>(item, "kind", where)) {
            try {
                pu.kind = parse_pu_kind(*kind);
            } catch (const Error& e) {
                rd.issues.push_back(where + ": " + e.what());
            }
        }
        pu.socket = rd.field<int>(item, "socket", where).value_or(0);
        pu.core_count = rd.field<int>(item, "core_count", where).value_or(1);
        if (pu.core_count <= 0) rd.issues.push_back(where + ": core_count must be positive");
        pu.cache_line = rd.field<std::uint32_t>(item, "cache_line", where, false).value_or(64);
        if (!is_power_of_two(pu.cache_line)) rd.issues.push_back(where + ": cache_line is not a power of two");
        if (auto caches = item.find("caches"); caches != item.end() && caches->is_array()) {
            for (const auto& c : *caches) {
                Cache cache;
                cache.level = rd.field<int>(c, "level", where).value_or(0);
                cache.size = rd.field<std::uint64_t>(c, "size", where).value_or(0);
                cache.shared = rd.field<bool>(c, "shared", where, false).value_or(false);
                pu.caches.push_back(cache);
            }
            std::sort(pu.caches.begin(), pu.caches.end(), [](const auto& a, const auto& b) { return a.level < b.level; });
            for (std::size_t i = 1; i < pu.caches.size(); ++i) {
                if (pu.caches[i].level == pu.caches[i - 1].level || pu.caches[i].size <= pu.caches[i - 1].size) {
                    rd.issues.push_back(where + ": cache sizes must strictly increase with level");
                    break;
                }
            }
        }
        spec.pus.push_back(std::move(pu));
    }

    for (const auto& item : list("memories")) {
        MemoryDomain mem;
        mem.id = rd.field<std::string>(item, "id", "memory").value_or("");
        std::string where = "memory '" + mem.id + "'";
        if (auto kind = rd.field<std::string>(item, "kind", where)) {
            try {
                mem.kind = parse_memory_kind(*kind);
            } catch (const Error& e) {
                rd.issues.push_back(where + ": " + e.what());
            }
        }
        mem.socket = rd.field<int>(item, "socket", where).value_or(0);
        mem.numa_node = rd.field<int>(item, "numa_node", where).value_or(0);
        mem.capacity = rd.field<std::uint64_t>(item, "capacity", where).value_or(0);
        mem.bandwidth = rd.bandwidth(item, "bandwidth", where).value_or(Rational(0));
        mem.attached_to = rd.field<std::string>(item, "attached_to", where, false);
        spec.memories.push_back(std::move(mem));
    }

    for (const auto& item : list("links")) {
        Link link;
        link.id = rd.field<std::string>(item, "id", "link").value_or("");
        std::string where = "link '" + link.id + "'";
        if (auto endpoints = rd.field<std::vector<std::string>>(item, "endpoints", where)) {
            if (endpoints->size() != 2) {
                rd.issues.push_back(where + ": endpoints must list exactly two nodes");
            } else {
                link.endpoint_a = (*endpoints)[0];
                link.endpoint_b = (*endpoints)[1];
            }
        }
        link.bandwidth_per_direction = rd.bandwidth(item, "bandwidth_per_direction", where).value_or(Rational(0));
        if (auto allowed = rd.field<std::vector<std::string>>(item, "allowed_initiators", where)) {
            for (const auto& kind : *allowed) {
                try {
                    link.allowed_initiators.insert(parse_pu_kind(kind));
                } catch (const Error& e) {
                    rd.issues.push_back(where + ": " + e.what());
                }
            }
        }
        link.assumption = rd.field<std::string>(item, "assumption", where, false);
        spec.links.push_back(std::move(link));
    }

    // Cross-reference checks.
    std::map<std::string, int> seen;
    auto count_id = [&](const std::string& id) { ++seen[id]; };
    for (const auto& p : spec.pus) count_id(p.id);
    for (const auto& m : spec.memories) count_id(m.id);
    for (const auto& l : spec.links) count_id(l.id);
    for (const auto& [id, n] : seen) {
        if (id.empty()) rd.issues.push_back("empty id");
        else if (n > 1) rd.issues.push_back("duplicate id '" + id + "'");
        if (socket_port_index(id)) rd.issues.push_back("id '" + id + "' collides with the socket port namespace");
    }

    int max_socket = -1;
    for (const auto& p : spec.pus) max_socket = std::max(max_socket, p.socket);
    spec.sockets = declared_sockets.value_or(max_socket + 1);
    auto check_socket = [&](int socket, const std::string& what) {
        if (socket < 0 || socket >= spec.sockets) {
            rd.issues.push_back(what + ": socket " + std::to_string(socket) + " is not declared");
        }
    };
    for (const auto& p : spec.pus) check_socket(p.socket, "pu '" + p.id + "'");

    std::map<int, std::string> numa_owner;
    for (const auto& m : spec.memories) {
        check_socket(m.socket, "memory '" + m.id + "'");
        auto [it, inserted] = numa_owner.emplace(m.numa_node, m.id);
        if (!inserted) {
            rd.issues.push_back("memory '" + m.id + "': numa_node " + std::to_string(m.numa_node) +
                                " already used by '" + it->second + "'");
        }
        if (m.attached_to) {
            auto port = socket_port_index(*m.attached_to);
            if (port) {
                check_socket(*port, "memory '" + m.id + "'");
            } else if (!spec.find_pu(*m.attached_to)) {
                rd.issues.push_back("memory '" + m.id + "': attached_to references unknown PU '" + *m.attached_to + "'");
            }
        }
    }

    auto node_of = [&](const std::string& ref) -> std::optional<std::string> {
        if (auto port = socket_port_index(ref)) {
            if (*port < 0 || *port >= spec.sockets) return std::nullopt;
            return ref;
        }
        if (spec.find_pu(ref)) return ref;
        if (const auto* m = spec.find_memory(ref)) return m->attached_to.value_or(m->id);
        return std::nullopt;
    };
    for (const auto& l : spec.links) {
        std::string where = "link '" + l.id + "'";
        if (l.endpoint_a.empty() && l.endpoint_b.empty()) continue;  // already reported
        auto a = node_of(l.endpoint_a);
        auto b = node_of(l.endpoint_b);
        if (!a) rd.issues.push_back(where + ": dangling endpoint '" + l.endpoint_a + "'");
        if (!b) rd.issues.push_back(where + ": dangling endpoint '" + l.endpoint_b + "'");
        if (a && b && *a == *b) rd.issues.push_back(where + ": endpoints are not distinct");
    }

    if (!rd.issues.empty()) throw TopologyError(std::move(rd.issues));
    return spec;
}

TopologySpec load_topology(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open topology file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_topology(buf.str());
}

std::string serialize_topology(const TopologySpec& spec) {
    json doc;
    doc["name"] = spec.name;
    doc["page_size"] = spec.page_size;
    doc["sockets"] = spec.sockets;
    doc["pus"] = json::array();
    for (const auto& p : spec.pus) {
        json caches = json::array();
        for (const auto& c : p.caches) caches.push_back({{"level", c.level}, {"size", c.size}, {"shared", c.shared}});
        doc["pus"].push_back({{"id", p.id},
                              {"kind", to_string(p.kind)},
                              {"socket", p.socket},
                              {"core_count", p.core_count},
                              {"cache_line", p.cache_line},
                              {"caches", caches}});
    }
    doc["memories"] = json::array();
    for (const auto& m : spec.memories) {
        json j = {{"id", m.id},
                  {"kind", to_string(m.kind)},
                  {"socket", m.socket},
                  {"numa_node", m.numa_node},
                  {"capacity", m.capacity},
                  {"bandwidth", to_string(m.bandwidth)}};
        if (m.attached_to) j["attached_to"] = *m.attached_to;
        doc["memories"].push_back(j);
    }
    doc["links"] = json::array();
    for (const auto& l : spec.links) {
        json allowed = json::array();
        for (auto k : l.allowed_initiators) allowed.push_back(to_string(k));
        json j = {{"id", l.id},
                  {"endpoints", {l.endpoint_a, l.endpoint_b}},
                  {"bandwidth_per_direction", to_string(l.bandwidth_per_direction)},
                  {"allowed_initiators", allowed}};
        if (l.assumption) j["assumption"] = *l.assumption;
        doc["links"].push_back(j);
    }
    return doc.dump(2) + "\n";
}

namespace {

struct Edge {
    const Link* link;
    std::string from_ref;  // declared endpoint names, used in resource ids
    std::string to_ref;
    std::string to_node;
};

std::string graph_node(const TopologySpec& spec, const std::string& ref) {
    if (const auto* m = spec.find_memory(ref)) return m->attached_to.value_or(m->id);
    return ref;
}

}  // namespace

Datapath resolve_datapath(const TopologySpec& spec, std::string_view pu_id, std::string_view memory_id) {
    const auto* pu = spec.find_pu(pu_id);
    const auto* mem = spec.find_memory(memory_id);
    if (!pu) throw Error("unknown PU '" + std::string(pu_id) + "'");
    if (!mem) throw Error("unknown memory '" + std::string(memory_id) + "'");

    Datapath path{pu->id, mem->id, {}};
    const std::string source = graph_node(spec, mem->id);
    const std::string target = pu->id;
    if (source == target) return path;

    std::unordered_map<std::string, std::vector<Edge>> adjacency;
    for (const auto& link : spec.links) {
        if (!link.allowed_initiators.contains(pu->kind)) continue;
        auto a = graph_node(spec, link.endpoint_a);
        auto b = graph_node(spec, link.endpoint_b);
        adjacency[a].push_back({&link, link.endpoint_a, link.endpoint_b, b});
        adjacency[b].push_back({&link, link.endpoint_b, link.endpoint_a, a});
    }

    // Distances to the initiator, then a greedy walk from the memory that
    // always takes the smallest link id still on a shortest path.
    std::unordered_map<std::string, int> dist{{target, 0}};
    std::deque<std::string> queue{target};
    while (!queue.empty()) {
        auto node = queue.front();
        queue.pop_front();
        for (const auto& e : adjacency[node]) {
            if (dist.emplace(e.to_node, dist[node] + 1).second) queue.push_back(e.to_node);
        }
    }
    if (!dist.contains(source)) {
        throw Error("no admissible path from memory '" + mem->id + "' to " + std::string(to_string(pu->kind)) + " '" +
                    pu->id + "'");
    }

    std::string node = source;
    while (node != target) {
        const Edge* best = nullptr;
        for (const auto& e : adjacency[node]) {
            auto it = dist.find(e.to_node);
            if (it == dist.end() || it->second != dist[node] - 1) continue;
            if (!best || e.link->id < best->link->id) best = &e;
        }
        path.hops.push_back({best->link->id, best->from_ref, best->to_ref});
        node = best->to_node;
    }
    return path;
}

BoundResult compute_bound(const TopologySpec& spec, Op op, std::string_view pu, std::string_view src,
                          const std::optional<std::string>& dst) {
    if (op == Op::Copy && !dst) throw Error("copy bound needs a destination memory");

    BoundResult result;
    result.op = op;
    result.initiator = std::string(pu);
    result.src = std::string(src);
    if (op == Op::Copy) result.dst = dst;

    auto use = [&](const std::string& resource, const Rational& capacity) {
        ++result.usage_counts[resource];
        result.capacities.emplace(resource, capacity);
    };
    auto account_read = [&](std::string_view memory) {
        auto path = resolve_datapath(spec, pu, memory);
        use(path.memory, spec.find_memory(path.memory)->bandwidth);
        for (const auto& hop : path.hops) use(hop.resource(), spec.find_link(hop.link)->bandwidth_per_direction);
    };
    auto account_write = [&](std::string_view memory) {
        auto path = resolve_datapath(spec, pu, memory);
        use(path.memory, spec.find_memory(path.memory)->bandwidth);
        for (const auto& hop : path.hops) {
            Hop reversed{hop.link, hop.to, hop.from};
            use(reversed.resource(), spec.find_link(hop.link)->bandwidth_per_direction);
        }
    };

    switch (op) {
        case Op::Read: account_read(src); break;
        case Op::Write: account_write(src); break;
        case Op::Copy:
            account_read(src);
            account_write(*dst);
            break;
    }

    bool first = true;
    for (const auto& [resource, count] : result.usage_counts) {
        Rational share = result.capacities.at(resource) / count;
        if (first || share < result.bound) {
            result.bound = share;
            result.limiting_resource = resource;
            first = false;
        }
    }
    return result;
}

BoundsMatrix bounds_matrix(const TopologySpec& spec, Op op, std::string_view initiator) {
    if (!spec.find_pu(initiator)) throw Error("unknown PU '" + std::string(initiator) + "'");
    BoundsMatrix matrix;
    matrix.op = op;
    matrix.initiator = std::string(initiator);
    for (const auto& m : spec.memories) matrix.columns.push_back(m.id);

    auto cell = [&](const std::string& row, const std::string& col, const std::string& src,
                    const std::optional<std::string>& dst) {
        BoundCell c{row, col, std::nullopt, {}};
        try {
            c.result = compute_bound(spec, op, initiator, src, dst);
        } catch (const Error& e) {
            c.reason = e.what();
        }
        return c;
    };

    if (op == Op::Copy) {
        matrix.rows = matrix.columns;
        for (const auto& src : matrix.rows) {
            auto& row = matrix.cells.emplace_back();
            for (const auto& dst : matrix.columns) row.push_back(cell(src, dst, src, dst));
        }
    } else {
        matrix.rows = {matrix.initiator};
        auto& row = matrix.cells.emplace_back();
        for (const auto& mem : matrix.columns) row.push_back(cell(matrix.initiator, mem, mem, std::nullopt));
    }
    return matrix;
}

}  // namespace membench
