// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "membench/error.hpp"
#include "membench/harness.hpp"

namespace membench {

using nlohmann::json;

void validate_case(const BenchmarkCase& c) {
    const std::string where = "case '" + c.id + "': ";
    if (c.id.empty()) throw Error("case id must not be empty");
    if (c.cores.empty()) throw Error(where + "needs at least one core");
    if (std::set<int>(c.cores.begin(), c.cores.end()).size() != c.cores.size()) {
        throw Error(where + "core list has duplicates");
    }
    for (int core : c.cores) {
        if (core < 0) throw Error(where + "negative core id " + std::to_string(core));
    }
    if (c.repetitions < 1) throw Error(where + "repetitions must be at least 1");

    switch (c.kernel) {
        case KernelKind::Copy:
            if (c.buffers.size() != 2) throw Error(where + "copy needs exactly two buffers (src, dst)");
            if (c.buffers[0].length != c.buffers[1].length) throw Error(where + "copy buffers differ in length");
            break;
        case KernelKind::PingPong:
            if (c.buffers.size() > 1) throw Error(where + "ping-pong takes at most one flag buffer");
            if (c.cores.size() != 2) throw Error(where + "ping-pong needs exactly two distinct cores");
            if (c.rounds < 2) throw Error(where + "ping-pong needs at least 2 rounds");
            break;
        default:
            if (c.buffers.size() != 1) throw Error(where + std::string(to_string(c.kernel)) + " needs exactly one buffer");
            break;
    }
    if (c.kernel == KernelKind::Chase) {
        if (c.cores.size() != 1) throw Error(where + "chase runs on exactly one core");
        if (c.granularity < 1) throw Error(where + "granularity must be at least 1");
    }
    if (c.kernel == KernelKind::Read && c.passes < 1) throw Error(where + "passes must be at least 1");
    if (c.kernel == KernelKind::Write && c.stride && (*c.stride == 0 || *c.stride % kAccessWidth != 0)) {
        throw Error(where + "write stride must be a positive multiple of 16");
    }
    for (const auto& b : c.buffers) {
        if (b.length == 0 && c.kernel != KernelKind::PingPong) throw Error(where + "buffer length must be positive");
    }
    if (c.noise) {
        if (c.noise->cores.empty()) throw Error(where + "noise needs at least one core");
        if (c.noise->length == 0) throw Error(where + "noise buffer length must be positive");
        for (int core : c.noise->cores) {
            if (std::find(c.cores.begin(), c.cores.end(), core) != c.cores.end()) {
                throw Error(where + "noise core " + std::to_string(core) + " overlaps the measurement cores");
            }
        }
        if (std::set<int>(c.noise->cores.begin(), c.noise->cores.end()).size() != c.noise->cores.size()) {
            throw Error(where + "noise core list has duplicates");
        }
    }
}

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw Error(where + "unknown key '" + key + "'");
        }
    }
}

PlacementPolicy parse_policy(const json& j, const std::string& where) {
    if (j.is_string()) return PlacementPolicy::from_label(j.get<std::string>());
    if (!j.is_object()) throw Error(where + "placement must be a label or an object");
    check_keys(j, {"kind", "node", "nodes", "cores"}, where + "placement: ");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "default") return PlacementPolicy::default_policy();
    if (kind == "first_touch") return PlacementPolicy::first_touch(j.value("cores", std::vector<int>{}));
    if (kind == "node") return PlacementPolicy::explicit_node(j.at("node").get<int>());
    if (kind == "interleave") return PlacementPolicy::interleave(j.at("nodes").get<std::vector<int>>());
    throw Error(where + "unknown placement kind '" + kind + "'");
}

BufferSpec parse_buffer(const json& j, const std::string& where) {
    if (!j.is_object()) throw Error(where + "buffer must be an object");
    check_keys(j, {"length", "placement", "alignment"}, where + "buffer: ");
    BufferSpec b;
    b.length = j.at("length").get<std::size_t>();
    if (j.contains("placement")) b.policy = parse_policy(j.at("placement"), where);
    b.alignment = j.value("alignment", std::size_t{4096});
    return b;
}

BenchmarkCase parse_case(const json& j, std::size_t index) {
    std::string where = "case #" + std::to_string(index) + ": ";
    if (!j.is_object()) throw Error(where + "must be an object");
    check_keys(j,
               {"id", "kernel", "cores", "initiator", "buffers", "repetitions", "warmup", "passes", "stride",
                "duration_ns", "granularity", "seed", "rounds", "noise"},
               where);
    BenchmarkCase c;
    c.id = j.at("id").get<std::string>();
    where = "case '" + c.id + "': ";
    c.kernel = parse_kernel_kind(j.at("kernel").get<std::string>());
    c.cores = j.at("cores").get<std::vector<int>>();
    if (j.contains("initiator")) c.initiator = j.at("initiator").get<std::string>();
    if (j.contains("buffers")) {
        for (const auto& b : j.at("buffers")) c.buffers.push_back(parse_buffer(b, where));
    }
    c.repetitions = j.value("repetitions", c.repetitions);
    c.warmup = j.value("warmup", c.warmup);
    c.passes = j.value("passes", c.passes);
    if (j.contains("stride")) c.stride = j.at("stride").get<std::size_t>();
    c.duration_ns = j.value("duration_ns", c.duration_ns);
    c.granularity = j.value("granularity", c.granularity);
    c.seed = j.value("seed", c.seed);
    c.rounds = j.value("rounds", c.rounds);
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        check_keys(n, {"cores", "length", "placement"}, where + "noise: ");
        NoiseConfig cfg;
        cfg.cores = n.at("cores").get<std::vector<int>>();
        cfg.length = n.value("length", cfg.length);
        if (n.contains("placement")) cfg.policy = parse_policy(n.at("placement"), where);
        c.noise = cfg;
    }
    return c;
}

}  // namespace

std::vector<BenchmarkCase> parse_suite(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("suite is not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw Error("suite must be a JSON list of cases");
    std::vector<BenchmarkCase> cases;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        try {
            cases.push_back(parse_case(doc[i], i));
        } catch (const json::exception& e) {
            throw Error("case #" + std::to_string(i) + ": " + e.what());
        }
        validate_case(cases.back());
        if (!ids.insert(cases.back().id).second) throw Error("duplicate case id '" + cases.back().id + "'");
    }
    return cases;
}

std::vector<BenchmarkCase> load_suite(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open suite file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_suite(buf.str());
}

SuiteResult run_suite(const std::vector<BenchmarkCase>& cases, const TopologySpec* spec, const RunOptions& options,
                      const std::function<void(const MeasurementRecord&)>& on_record) {
    SuiteResult result;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        if (i > 0 && options.cooldown_ns > 0) std::this_thread::sleep_for(std::chrono::nanoseconds(options.cooldown_ns));
        try {
            result.records.push_back(run_case(cases[i], spec, options));
            if (on_record) on_record(result.records.back());
        } catch (const std::exception& e) {
            result.errors.push_back({cases[i].id, e.what()});
        }
    }
    return result;
}

}  // namespace membench
