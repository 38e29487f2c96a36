// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "membench/cli.hpp"
#include "support.hpp"

using namespace membench;
using test_support::read_file;
using test_support::source_path;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

bool single_error_line(const std::string& err) {
    return err.rfind("error: ", 0) == 0 && err.find('\n') == err.size() - 1;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    for (auto args : std::vector<std::vector<std::string>>{
             {}, {"frobnicate"}, {"topo"}, {"topo", "bounds", "x.json"}, {"run", "suite.json"},
             {"topo", "bounds", "x.json", "--initiator", "a", "--op", "move"},
             {"report", "r.jsonl", "--heatmap", "--lines", "--out", "x.svg"}}) {
        auto r = run(args);
        CHECK(r.code == kExitUsageError);
        CHECK(single_error_line(r.err));
    }
}

TEST_CASE("help and version exit 0") {
    auto h = run({"--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("topo") != std::string::npos);
    CHECK(run({"--version"}).code == 0);
}

TEST_CASE("topo validate") {
    auto ok = run({"topo", "validate", source_path("topologies/quad_gh200.json")});
    CHECK(ok.code == 0);
    CHECK(ok.out.rfind("ok: quad-gh200", 0) == 0);
    CHECK(ok.out.find("assumption: link gi01") != std::string::npos);

    test_support::TempDir dir;
    std::ofstream(dir.file("broken.json")) << R"({"name": "broken", "page_size": 4096, "pus": [], "memories": []})";
    auto bad = run({"topo", "validate", dir.file("broken.json")});
    CHECK(bad.code == kExitDomainError);
    CHECK(single_error_line(bad.err));
    CHECK(bad.err.find("links") != std::string::npos);

    auto missing = run({"topo", "validate", dir.file("absent.json")});
    CHECK(missing.code == kExitDomainError);
    CHECK(single_error_line(missing.err));
}

TEST_CASE("topo bounds") {
    auto copy = run({"topo", "bounds", source_path("topologies/quad_gh200.json"), "--op", "copy", "--initiator",
                     "hopper0"});
    CHECK(copy.code == 0);
    CHECK(copy.out.find("ddr0 -> ddr0: 250 (ddr0)") != std::string::npos);

    auto json = run({"topo", "bounds", source_path("topologies/quad_gh200.json"), "--op", "read", "--initiator",
                     "hopper0", "--json"});
    CHECK(json.code == 0);
    CHECK(json.out.find("\"bound\": \"4000\"") != std::string::npos);

    test_support::TempDir dir;
    auto svg = run({"topo", "bounds", source_path("topologies/quad_gh200.json"), "--op", "copy", "--initiator",
                    "grace0", "--svg", dir.file("b.svg")});
    CHECK(svg.code == 0);
    CHECK(read_file(dir.file("b.svg")).rfind("<svg", 0) == 0);

    auto unknown = run({"topo", "bounds", source_path("topologies/quad_gh200.json"), "--initiator", "tpu0"});
    CHECK(unknown.code == kExitDomainError);
    CHECK(single_error_line(unknown.err));
}

TEST_CASE("clockinfo") {
    auto r = run({"clockinfo"});
    CHECK(r.code == 0);
    CHECK(r.out.find("resolution_ns: ") != std::string::npos);
    CHECK(r.out.find("source: ") != std::string::npos);
}

TEST_CASE("run refuses cores beyond the host") {
    test_support::TempDir dir;
    std::ofstream(dir.file("suite.json"))
        << R"([{"id": "far", "kernel": "read", "cores": [100000], "buffers": [{"length": 4096}]}])";
    unsetenv("MEMBENCH_NO_PIN");
    auto r = run({"run", dir.file("suite.json"), "--out", dir.file("r.jsonl")});
    CHECK(r.code == kExitDomainError);
    CHECK(single_error_line(r.err));
    CHECK(r.err.find("host inventory") != std::string::npos);
}

TEST_CASE("run, analyze and report") {
    test_support::TempDir dir;
    std::ofstream(dir.file("suite.json")) << R"([
      {"id": "rd", "kernel": "read", "cores": [0, 1], "initiator": "cpu0",
       "buffers": [{"length": 1048576, "placement": "node:0"}], "repetitions": 2},
      {"id": "ch1", "kernel": "chase", "cores": [0], "buffers": [{"length": 65536}],
       "duration_ns": 1000000, "repetitions": 1},
      {"id": "ch2", "kernel": "chase", "cores": [0], "buffers": [{"length": 131072}],
       "duration_ns": 1000000, "repetitions": 1},
      {"id": "big", "kernel": "read", "cores": [0], "buffers": [{"length": 1152921504606846976}]}
    ])";
    setenv("MEMBENCH_NO_PIN", "1", 1);
    auto r = run({"run", dir.file("suite.json"), "--topology", source_path("topologies/desk_single_socket.json"),
                  "--out", dir.file("r.jsonl"), "--cooldown-ms", "0"});
    unsetenv("MEMBENCH_NO_PIN");
    // The oversized case fails; the others are persisted.
    CHECK(r.code == kExitDomainError);
    CHECK(single_error_line(r.err));
    CHECK(r.err.find("big") != std::string::npos);
    CHECK(parse_records(read_file(dir.file("r.jsonl"))).size() == 3);

    auto a = run({"analyze", dir.file("r.jsonl"), "--topology", source_path("topologies/desk_single_socket.json")});
    CHECK(a.code == 0);
    CHECK(a.out.find("rd [read]") != std::string::npos);
    CHECK(a.out.find("bound ") != std::string::npos);

    // Two chase sizes are too few for breakpoint detection.
    auto bp = run({"analyze", dir.file("r.jsonl"), "--breakpoints"});
    CHECK(bp.code == kExitDomainError);
    CHECK(single_error_line(bp.err));

    CHECK(run({"report", dir.file("r.jsonl"), "--heatmap", "--out", dir.file("h.svg")}).code == 0);
    CHECK(run({"report", dir.file("r.jsonl"), "--lines", "--out", dir.file("l.svg"), "--topology",
               source_path("topologies/desk_single_socket.json"), "--initiator", "cpu0"})
              .code == 0);
    CHECK(read_file(dir.file("l.svg")).find("class=\"marker\"") != std::string::npos);
    CHECK(run({"report", dir.file("r.jsonl"), "--out", dir.file("r.csv")}).code == 0);
    CHECK(read_file(dir.file("r.csv")).rfind("case_id,kernel", 0) == 0);
    CHECK(run({"report", dir.file("r.jsonl"), "--jsonl", "--out", dir.file("copy.jsonl")}).code == 0);
    CHECK(read_file(dir.file("copy.jsonl")) == read_file(dir.file("r.jsonl")));

    auto missing = run({"report", dir.file("nope.jsonl"), "--csv", "--out", dir.file("x.csv")});
    CHECK(missing.code == kExitDomainError);
}

TEST_CASE("the installed binary reports exit codes") {
    const char* bin = std::getenv("MEMBENCH_CLI");
    if (!bin) return;
    CHECK(WEXITSTATUS(std::system((std::string(bin) + " clockinfo >/dev/null").c_str())) == 0);
    CHECK(WEXITSTATUS(std::system((std::string(bin) + " nonsense 2>/dev/null").c_str())) == 2);
}
