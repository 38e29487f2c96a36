// SPDX-License-Identifier: Apache-2.0

#include "membench/records.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "membench/error.hpp"

#ifndef MEMBENCH_VERSION
#define MEMBENCH_VERSION "0.0.0"
#endif

namespace membench {

using nlohmann::json;

std::string_view to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::Read: return "read";
        case KernelKind::Write: return "write";
        case KernelKind::Copy: return "copy";
        case KernelKind::Chase: return "chase";
        case KernelKind::PingPong: return "pingpong";
    }
    return "?";
}

KernelKind parse_kernel_kind(std::string_view text) {
    for (auto k : {KernelKind::Read, KernelKind::Write, KernelKind::Copy, KernelKind::Chase, KernelKind::PingPong}) {
        if (to_string(k) == text) return k;
    }
    throw Error("unknown kernel '" + std::string(text) + "'");
}

bool is_latency_kernel(KernelKind kind) { return kind == KernelKind::Chase || kind == KernelKind::PingPong; }

std::string_view unit_for(KernelKind kind) {
    switch (kind) {
        case KernelKind::Chase: return "ns/access";
        case KernelKind::PingPong: return "ns/exchange";
        default: return "GB/s";
    }
}

double derive_value(KernelKind kind, const std::vector<IterationSample>& iterations) {
    std::uint64_t units = 0;
    std::uint64_t elapsed = 0;
    std::size_t measured = 0;
    for (const auto& it : iterations) {
        if (it.warmup) continue;
        units += it.units;
        elapsed += it.elapsed_ns;
        ++measured;
    }
    if (measured == 0) throw Error("record has no measured iterations");
    if (is_latency_kernel(kind)) {
        return units == 0 ? 0.0 : static_cast<double>(elapsed) / static_cast<double>(units);
    }
    return elapsed == 0 ? 0.0 : static_cast<double>(units) / static_cast<double>(elapsed);
}

namespace {

json nodes_json(const std::optional<std::vector<int>>& nodes) {
    return nodes ? json(*nodes) : json("unverified");
}

std::optional<std::vector<int>> nodes_from(const json& j) {
    if (j.is_string()) return std::nullopt;
    return j.get<std::vector<int>>();
}

}  // namespace

std::string to_json_line(const MeasurementRecord& r) {
    json j;
    j["case_id"] = r.case_id;
    j["kernel"] = to_string(r.kernel);
    j["cores"] = r.cores;
    j["workers"] = r.workers;
    j["initiator"] = r.initiator ? json(*r.initiator) : json(nullptr);
    j["placements"] = json::array();
    for (const auto& p : r.placements) {
        j["placements"].push_back({{"policy", p.policy},
                                   {"length", p.length},
                                   {"realized_nodes", nodes_json(p.realized_nodes)},
                                   {"degraded", p.degraded},
                                   {"notes", p.notes}});
    }
    j["iterations"] = json::array();
    for (const auto& it : r.iterations) {
        j["iterations"].push_back({{"elapsed_ns", it.elapsed_ns}, {"units", it.units}, {"warmup", it.warmup}});
    }
    j["bytes_per_iteration"] = r.bytes_per_iteration;
    j["unit"] = r.unit;
    j["derived_value"] = r.derived_value;
    j["clock"] = {{"frequency_hz", r.clock.frequency_hz},
                  {"resolution_ns", r.clock.resolution_ns},
                  {"source", r.clock.source}};
    j["topology_hash"] = r.topology_hash;
    j["start_skew_ns"] = r.start_skew_ns;
    j["timestamp"] = r.timestamp;
    j["version"] = r.version;
    j["access_width"] = r.access_width;
    j["pinned"] = r.pinned;
    if (r.noise) {
        j["noise"] = {{"cores", r.noise->cores},
                      {"length", r.noise->length},
                      {"policy", r.noise->policy},
                      {"bytes_read", r.noise->bytes_read}};
    } else {
        j["noise"] = nullptr;
    }
    j["checksum"] = r.checksum;
    return j.dump();
}

MeasurementRecord parse_record(std::string_view line) {
    try {
        json j = json::parse(line);
        MeasurementRecord r;
        r.case_id = j.at("case_id").get<std::string>();
        r.kernel = parse_kernel_kind(j.at("kernel").get<std::string>());
        r.cores = j.at("cores").get<std::vector<int>>();
        r.workers = j.at("workers").get<std::uint64_t>();
        if (!j.at("initiator").is_null()) r.initiator = j.at("initiator").get<std::string>();
        for (const auto& p : j.at("placements")) {
            r.placements.push_back({p.at("policy").get<std::string>(), p.at("length").get<std::uint64_t>(),
                                    nodes_from(p.at("realized_nodes")), p.at("degraded").get<bool>(),
                                    p.at("notes").get<std::vector<std::string>>()});
        }
        for (const auto& it : j.at("iterations")) {
            r.iterations.push_back(
                {it.at("elapsed_ns").get<Tick>(), it.at("units").get<std::uint64_t>(), it.at("warmup").get<bool>()});
        }
        r.bytes_per_iteration = j.at("bytes_per_iteration").get<std::uint64_t>();
        r.unit = j.at("unit").get<std::string>();
        r.derived_value = j.at("derived_value").get<double>();
        const auto& c = j.at("clock");
        r.clock = {c.at("frequency_hz").get<std::uint64_t>(), c.at("resolution_ns").get<Tick>(),
                   c.at("source").get<std::string>()};
        r.topology_hash = j.at("topology_hash").get<std::string>();
        r.start_skew_ns = j.at("start_skew_ns").get<Tick>();
        r.timestamp = j.at("timestamp").get<std::string>();
        r.version = j.at("version").get<std::string>();
        r.access_width = j.at("access_width").get<std::uint64_t>();
        r.pinned = j.at("pinned").get<bool>();
        if (!j.at("noise").is_null()) {
            const auto& n = j.at("noise");
            r.noise = NoiseRecord{n.at("cores").get<std::vector<int>>(), n.at("length").get<std::uint64_t>(),
                                  n.at("policy").get<std::string>(), n.at("bytes_read").get<std::uint64_t>()};
        }
        r.checksum = j.at("checksum").get<std::uint64_t>();
        return r;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed record: ") + e.what());
    }
}

std::vector<MeasurementRecord> parse_records(std::string_view text) {
    std::vector<MeasurementRecord> out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            out.push_back(parse_record(line));
        } catch (const Error& e) {
            throw Error("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<MeasurementRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open results file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_records(buf.str());
}

std::string toolkit_version() { return MEMBENCH_VERSION; }

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace membench
