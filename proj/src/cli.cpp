// SPDX-License-Identifier: Apache-2.0

#include "membench/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "membench/affinity.hpp"
#include "membench/analysis.hpp"
#include "membench/error.hpp"
#include "membench/harness.hpp"
#include "membench/report.hpp"
#include "membench/topo.hpp"

namespace membench {

namespace {

bool no_pin_requested() {
    const char* v = std::getenv("MEMBENCH_NO_PIN");
    return v && std::string_view(v) == "1";
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + path + "'");
    f << content;
    if (!f) throw Error("write to '" + path + "' failed");
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

nlohmann::json bound_json(const BoundResult& r) {
    nlohmann::json usage = nlohmann::json::object();
    for (const auto& [res, n] : r.usage_counts) usage[res] = {{"count", n}, {"capacity", to_string(r.capacities.at(res))}};
    return {{"bound", to_string(r.bound)},
            {"bound_gbps", to_double(r.bound)},
            {"limiting_resource", r.limiting_resource},
            {"resources", usage}};
}

void print_bounds(const BoundsMatrix& b, bool as_json, std::ostream& out) {
    if (as_json) {
        nlohmann::json j;
        j["op"] = to_string(b.op);
        j["initiator"] = b.initiator;
        j["rows"] = b.rows;
        j["columns"] = b.columns;
        j["cells"] = nlohmann::json::array();
        for (const auto& row : b.cells) {
            for (const auto& cell : row) {
                nlohmann::json c = {{"row", cell.row}, {"column", cell.column}};
                if (cell.result) {
                    c.update(bound_json(*cell.result));
                } else {
                    c["bound"] = nullptr;
                    c["reason"] = cell.reason;
                }
                j["cells"].push_back(c);
            }
        }
        out << j.dump(2) << "\n";
        return;
    }
    out << fmt::format("{} bounds from {} (GB/s)\n", to_string(b.op), b.initiator);
    std::size_t w = 8;
    for (const auto& r : b.rows) w = std::max(w, r.size());
    out << fmt::format("{:<{}}", b.op == Op::Copy ? "src\\dst" : "", w);
    for (const auto& c : b.columns) out << fmt::format("  {:>10}", c);
    out << "\n";
    for (std::size_t i = 0; i < b.rows.size(); ++i) {
        out << fmt::format("{:<{}}", b.rows[i], w);
        for (const auto& cell : b.cells[i]) {
            out << fmt::format("  {:>10}", cell.result ? to_string(cell.result->bound) : std::string("-"));
        }
        out << "\n";
    }
    out << "limiting resources:\n";
    for (const auto& row : b.cells) {
        for (const auto& cell : row) {
            const std::string where = b.op == Op::Copy ? cell.row + " -> " + cell.column : cell.column;
            if (cell.result) {
                out << fmt::format("  {}: {} ({})\n", where, to_string(cell.result->bound), cell.result->limiting_resource);
            } else {
                out << fmt::format("  {}: unreachable ({})\n", where, cell.reason);
            }
        }
    }
}

int cmd_topo_validate(const std::string& file, std::ostream& out) {
    auto spec = load_topology(file);
    out << fmt::format("ok: {} ({} PUs, {} memories, {} links) sha256 {}\n", spec.name, spec.pus.size(),
                       spec.memories.size(), spec.links.size(), topology_hash(spec));
    for (const auto& l : spec.links) {
        if (l.assumption) out << fmt::format("assumption: link {}: {}\n", l.id, *l.assumption);
    }
    return kExitOk;
}

int cmd_topo_bounds(const std::string& file, const std::string& op, const std::string& initiator, bool as_json,
                    const std::string& svg, std::ostream& out) {
    auto spec = load_topology(file);
    auto b = bounds_matrix(spec, parse_op(op), initiator);
    print_bounds(b, as_json, out);
    if (!svg.empty()) write_file(svg, render_heatmap(bounds_to_matrix(b)));
    return kExitOk;
}

int cmd_run(const std::string& suite_path, const std::string& topo_path, const std::string& out_path,
            double cooldown_ms, double delay_us, std::ostream& out, std::ostream& err) {
    auto cases = load_suite(suite_path);
    std::optional<TopologySpec> spec;
    if (!topo_path.empty()) spec = load_topology(topo_path);

    RunOptions options;
    options.allow_unpinned = no_pin_requested();
    options.cooldown_ns = static_cast<Tick>(cooldown_ms * 1e6);
    options.start_delay_ns = static_cast<Tick>(delay_us * 1e3);

    if (!options.allow_unpinned) {
        const auto host = host_cores();
        std::set<int> wanted;
        for (const auto& c : cases) {
            wanted.insert(c.cores.begin(), c.cores.end());
            if (c.noise) wanted.insert(c.noise->cores.begin(), c.noise->cores.end());
        }
        std::vector<int> missing;
        for (int core : wanted) {
            if (std::find(host.begin(), host.end(), core) == host.end()) missing.push_back(core);
        }
        if (!missing.empty()) {
            throw Error("requested cores " + join_ints(missing) + " exceed the host inventory (" +
                        std::to_string(host.size()) + " usable cores: " + join_ints(host) +
                        "); set MEMBENCH_NO_PIN=1 for an unpinned smoke run");
        }
    }

    std::ofstream results(out_path, std::ios::trunc);
    if (!results) throw Error("cannot write '" + out_path + "'");
    auto result = run_suite(cases, spec ? &*spec : nullptr, options, [&](const MeasurementRecord& r) {
        results << to_json_line(r) << "\n";
        results.flush();
        out << fmt::format("{}: {:.4g} {}\n", r.case_id, r.derived_value, r.unit);
    });
    out << fmt::format("{} of {} cases recorded to {}\n", result.records.size(), cases.size(), out_path);
    if (!result.errors.empty()) {
        const auto& e = result.errors.front();
        err << "error: " << result.errors.size() << " case(s) failed; case '" << e.case_id
            << "': " << one_line(e.message) << "\n";
        return kExitDomainError;
    }
    return kExitOk;
}

int cmd_analyze(const std::string& results_path, const std::string& topo_path, bool breakpoints, double delta,
                std::size_t k, std::ostream& out) {
    auto records = load_records(results_path);
    std::optional<TopologySpec> spec;
    if (!topo_path.empty()) spec = load_topology(topo_path);
    for (const auto& r : records) {
        auto s = summarize(r);
        out << fmt::format("{} [{}] {:.4g} {} | iter ns mean {:.1f} min {} max {} stdev {:.1f} (n={})\n", r.case_id,
                           to_string(r.kernel), s.derived_value, s.derived_unit, to_double(s.mean), s.min, s.max,
                           s.stdev, s.count);
        if (spec && !is_latency_kernel(r.kernel)) {
            try {
                auto f = fraction_of_bound(r, *spec);
                out << fmt::format("  bound {} GB/s via {}, fraction {:.2}{}\n", to_string(f.bound),
                                   f.model.limiting_resource, to_double(f.fraction),
                                   f.annotation.empty() ? "" : " " + f.annotation);
            } catch (const Error& e) {
                out << "  bound n/a: " << one_line(e.what()) << "\n";
            }
        }
    }
    if (breakpoints) {
        auto curve = latency_curve(records);
        auto found = detect_breakpoints(curve, delta, k);
        out << fmt::format("breakpoints (delta {}, k {}):", delta, k);
        for (auto b : found) out << " " << format_bytes(b);
        out << "\n";
    }
    return kExitOk;
}

int cmd_report(const std::string& results_path, bool heatmap, bool lines, bool csv, bool jsonl,
               const std::string& out_path, const std::string& topo_path, const std::string& initiator,
               std::ostream& out) {
    auto records = load_records(results_path);
    if (!heatmap && !lines && !csv && !jsonl) {
        if (out_path.ends_with(".csv")) csv = true;
        else if (out_path.ends_with(".jsonl")) jsonl = true;
        else heatmap = true;
    }
    std::string doc;
    if (csv) {
        doc = export_records(records, ExportFormat::Csv);
    } else if (jsonl) {
        doc = export_records(records, ExportFormat::JsonLines);
    } else if (heatmap) {
        if (records.empty()) throw Error("no records to render");
        doc = render_heatmap(records_to_matrix(records));
    } else {
        auto plot = records_to_lines(records);
        if (!topo_path.empty() && !initiator.empty()) {
            auto spec = load_topology(topo_path);
            const auto* pu = spec.find_pu(initiator);
            if (!pu) throw Error("initiator '" + initiator + "' is not a PU of topology '" + spec.name + "'");
            plot.markers = cache_markers(*pu);
        }
        if (plot.series.empty()) throw Error("no kernel/placement group has two or more buffer sizes to plot");
        doc = render_lines(plot);
    }
    write_file(out_path, doc);
    out << fmt::format("wrote {} ({} records)\n", out_path, records.size());
    return kExitOk;
}

int cmd_clockinfo(std::ostream& out) {
    auto info = estimate_resolution(system_clock());
    out << fmt::format("source: {}\nresolution_ns: {}\nfrequency_hz: {}\n", info.source, info.resolution_ns,
                       info.frequency_hz);
    return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"memory datapath benchmark toolkit", "membench"};
    app.set_version_flag("--version", toolkit_version());
    app.require_subcommand(1);

    auto* topo = app.add_subcommand("topo", "topology validation and bound model");
    topo->require_subcommand(1);
    std::string topo_file, op = "read", initiator, bounds_svg;
    bool as_json = false;
    auto* validate = topo->add_subcommand("validate", "check a topology file");
    validate->add_option("file", topo_file, "topology JSON")->required();
    auto* bounds = topo->add_subcommand("bounds", "theoretical bound matrix");
    bounds->add_option("file", topo_file, "topology JSON")->required();
    bounds->add_option("--op", op, "read|write|copy")->check(CLI::IsMember({"read", "write", "copy"}));
    bounds->add_option("--initiator", initiator, "initiating PU id")->required();
    bounds->add_flag("--json", as_json, "JSON output");
    bounds->add_option("--svg", bounds_svg, "also write a heatmap");

    std::string suite, topology, out_path;
    double cooldown_ms = 100.0, delay_us = 1000.0;
    auto* run = app.add_subcommand("run", "execute a benchmark suite");
    run->add_option("suite", suite, "suite JSON")->required();
    run->add_option("--topology", topology, "topology JSON");
    run->add_option("--out", out_path, "results JSON-lines")->required();
    run->add_option("--cooldown-ms", cooldown_ms, "pause between cases")->check(CLI::NonNegativeNumber);
    run->add_option("--start-delay-us", delay_us, "synchronized start delay")->check(CLI::PositiveNumber);

    std::string results;
    bool breakpoints = false;
    double delta = kDefaultBreakpointDelta;
    std::size_t window = kDefaultBreakpointWindow;
    auto* analyze = app.add_subcommand("analyze", "statistics, bound fractions, cache breakpoints");
    analyze->add_option("results", results, "results JSON-lines")->required();
    analyze->add_option("--topology", topology, "topology JSON");
    analyze->add_flag("--breakpoints", breakpoints, "detect cache-size breakpoints from chase records");
    analyze->add_option("--delta", delta, "breakpoint threshold")->check(CLI::PositiveNumber);
    analyze->add_option("--k", window, "breakpoint median window")->check(CLI::PositiveNumber);

    bool heatmap = false, lines = false, csv = false, jsonl = false;
    auto* report = app.add_subcommand("report", "render or export results");
    report->add_option("results", results, "results JSON-lines")->required();
    auto* fmt_group = report->add_option_group("format");
    fmt_group->add_flag("--heatmap", heatmap, "SVG heatmap");
    fmt_group->add_flag("--lines", lines, "SVG line plot over buffer size");
    fmt_group->add_flag("--csv", csv, "CSV export");
    fmt_group->add_flag("--jsonl", jsonl, "JSON-lines export");
    fmt_group->require_option(0, 1);
    report->add_option("--out", out_path, "output file")->required();
    report->add_option("--topology", topology, "topology JSON (cache markers for --lines)");
    report->add_option("--initiator", initiator, "PU whose caches are marked");

    auto* clockinfo = app.add_subcommand("clockinfo", "timer source and resolution");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << toolkit_version() << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << one_line(e.what()) << "\n";
        return kExitUsageError;
    }

    try {
        if (validate->parsed()) return cmd_topo_validate(topo_file, out);
        if (bounds->parsed()) return cmd_topo_bounds(topo_file, op, initiator, as_json, bounds_svg, out);
        if (run->parsed()) return cmd_run(suite, topology, out_path, cooldown_ms, delay_us, out, err);
        if (analyze->parsed()) return cmd_analyze(results, topology, breakpoints, delta, window, out);
        if (report->parsed()) {
            return cmd_report(results, heatmap, lines, csv, jsonl, out_path, topology, initiator, out);
        }
        if (clockinfo->parsed()) return cmd_clockinfo(out);
    } catch (const TopologyError& e) {
        std::string msg = "invalid topology: ";
        for (std::size_t i = 0; i < e.issues().size(); ++i) msg += (i ? "; " : "") + e.issues()[i];
        err << "error: " << one_line(msg) << "\n";
        return kExitDomainError;
    } catch (const std::exception& e) {
        err << "error: " << one_line(e.what()) << "\n";
        return kExitDomainError;
    }
    err << "error: no subcommand\n";
    return kExitUsageError;
}

}  // namespace membench
