// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>

#include <json.hpp>
#include <openssl/evp.h>

#include "membench/error.hpp"
#include "membench/topo.hpp"

namespace membench {

using nlohmann::json;

// Entities sorted by id, keys sorted (json's default object is ordered),
// link endpoints sorted, bandwidths as reduced fractions.
std::string canonical_topology(const TopologySpec& spec) {
    auto by_id = [](const auto* a, const auto* b) { return a->id < b->id; };

    std::vector<const ProcessingUnit*> pus;
    for (const auto& p : spec.pus) pus.push_back(&p);
    std::sort(pus.begin(), pus.end(), by_id);
    std::vector<const MemoryDomain*> mems;
    for (const auto& m : spec.memories) mems.push_back(&m);
    std::sort(mems.begin(), mems.end(), by_id);
    std::vector<const Link*> links;
    for (const auto& l : spec.links) links.push_back(&l);
    std::sort(links.begin(), links.end(), by_id);

    json doc;
    doc["name"] = spec.name;
    doc["page_size"] = spec.page_size;
    doc["sockets"] = spec.sockets;
    doc["pus"] = json::array();
    for (const auto* p : pus) {
        json caches = json::array();
        for (const auto& c : p->caches) caches.push_back({c.level, c.size, c.shared});
        doc["pus"].push_back({{"id", p->id},
                              {"kind", to_string(p->kind)},
                              {"socket", p->socket},
                              {"core_count", p->core_count},
                              {"cache_line", p->cache_line},
                              {"caches", caches}});
    }
    doc["memories"] = json::array();
    for (const auto* m : mems) {
        doc["memories"].push_back({{"id", m->id},
                                   {"kind", to_string(m->kind)},
                                   {"socket", m->socket},
                                   {"numa_node", m->numa_node},
                                   {"capacity", m->capacity},
                                   {"bandwidth", to_string(m->bandwidth)},
                                   {"attached_to", m->attached_to ? json(*m->attached_to) : json(nullptr)}});
    }
    doc["links"] = json::array();
    for (const auto* l : links) {
        auto ends = std::minmax(l->endpoint_a, l->endpoint_b);
        json allowed = json::array();
        for (auto k : l->allowed_initiators) allowed.push_back(to_string(k));
        doc["links"].push_back({{"id", l->id},
                                {"endpoints", {ends.first, ends.second}},
                                {"bandwidth_per_direction", to_string(l->bandwidth_per_direction)},
                                {"allowed_initiators", allowed},
                                {"assumption", l->assumption ? json(*l->assumption) : json(nullptr)}});
    }
    return doc.dump();
}

std::string topology_hash(const TopologySpec& spec) {
    const std::string canonical = canonical_topology(spec);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(canonical.data(), canonical.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 digest failed");
    }
    std::string hex;
    hex.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        char buf[3];
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

}  // namespace membench
