// SPDX-License-Identifier: Apache-2.0

#include "membench/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>

#include "membench/error.hpp"

namespace membench {

void Matrix::validate() const {
    if (row_labels.empty() || column_labels.empty()) throw Error("matrix is empty");
    if (values.size() != row_labels.size()) throw Error("matrix row count does not match its labels");
    for (const auto& row : values) {
        if (row.size() != column_labels.size()) throw Error("matrix is not rectangular");
    }
    if (std::set<std::string>(row_labels.begin(), row_labels.end()).size() != row_labels.size()) {
        throw Error("matrix row labels are not unique");
    }
    if (std::set<std::string>(column_labels.begin(), column_labels.end()).size() != column_labels.size()) {
        throw Error("matrix column labels are not unique");
    }
    if (!annotations.empty()) {
        if (annotations.size() != values.size()) throw Error("matrix annotations do not match its shape");
        for (const auto& row : annotations) {
            if (row.size() != column_labels.size()) throw Error("matrix annotations do not match its shape");
        }
    }
}

namespace {

std::string join_ints(const std::vector<int>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += std::to_string(v[i]);
    }
    return out;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view text, std::size_t& pos, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    while (pos < text.size()) {
        char c = text[pos++];
        if (quoted) {
            if (c == '"') {
                if (pos < text.size() && text[pos] == '"') {
                    cur += '"';
                    ++pos;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty() && !was_quoted) {
            quoted = was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else if (c == '\n') {
            fields.push_back(std::move(cur));
            return fields;
        } else if (c == '\r' && pos < text.size() && text[pos] == '\n') {
            continue;
        } else {
            cur += c;
        }
    }
    if (quoted) throw Error("csv line " + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(std::move(cur));
    return fields;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line_no, std::string_view column) {
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error("csv line " + std::to_string(line_no) + ": bad " + std::string(column) + " '" + s + "'");
    }
    return value;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string format_value(double v) { return fmt::format("{:.4g}", v); }

std::string hex_color(int r, int g, int b) { return fmt::format("#{:02x}{:02x}{:02x}", r, g, b); }

// Light to dark blue.
std::string ramp(double t) {
    const int r = static_cast<int>(std::lround(247 + (8 - 247) * t));
    const int g = static_cast<int>(std::lround(251 + (48 - 251) * t));
    const int b = static_cast<int>(std::lround(255 + (107 - 255) * t));
    return hex_color(r, g, b);
}

const std::vector<std::string> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::vector<CsvRow> csv_rows(const std::vector<MeasurementRecord>& records) {
    std::vector<CsvRow> rows;
    for (const auto& r : records) {
        std::string placements;
        for (std::size_t i = 0; i < r.placements.size(); ++i) placements += (i ? "|" : "") + r.placements[i].policy;
        for (std::size_t i = 0; i < r.iterations.size(); ++i) {
            const auto& it = r.iterations[i];
            rows.push_back({r.case_id, std::string(to_string(r.kernel)), join_ints(r.cores, ';'), placements,
                            r.bytes_per_iteration, i, it.warmup, it.elapsed_ns, r.derived_value, r.unit,
                            r.topology_hash, r.timestamp});
        }
    }
    return rows;
}

std::string render_csv(const std::vector<CsvRow>& rows) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(r.case_id), csv_field(r.kernel),
                           csv_field(r.cores), csv_field(r.placements), r.bytes, r.iter_index, r.warmup ? 1 : 0,
                           r.elapsed_ns, r.derived_value, csv_field(r.unit), csv_field(r.topo_hash),
                           csv_field(r.timestamp));
    }
    return out;
}

std::vector<CsvRow> parse_csv(std::string_view text) {
    std::size_t pos = 0;
    std::size_t line_no = 1;
    auto header = split_csv_line(text, pos, line_no);
    std::string joined;
    for (std::size_t i = 0; i < header.size(); ++i) joined += (i ? "," : "") + header[i];
    if (joined != kCsvHeader) throw Error("csv header does not match the expected columns");
    std::vector<CsvRow> rows;
    while (pos < text.size()) {
        ++line_no;
        auto f = split_csv_line(text, pos, line_no);
        if (f.size() == 1 && f[0].empty()) continue;
        if (f.size() != 12) {
            throw Error("csv line " + std::to_string(line_no) + ": expected 12 fields, got " + std::to_string(f.size()));
        }
        CsvRow r;
        r.case_id = f[0];
        r.kernel = f[1];
        r.cores = f[2];
        r.placements = f[3];
        r.bytes = parse_number<std::uint64_t>(f[4], line_no, "bytes");
        r.iter_index = parse_number<std::uint64_t>(f[5], line_no, "iter_index");
        if (f[6] != "0" && f[6] != "1") throw Error("csv line " + std::to_string(line_no) + ": bad warmup_flag");
        r.warmup = f[6] == "1";
        r.elapsed_ns = parse_number<std::uint64_t>(f[7], line_no, "elapsed_ns");
        r.derived_value = parse_number<double>(f[8], line_no, "derived_value");
        r.unit = f[9];
        r.topo_hash = f[10];
        r.timestamp = f[11];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string export_records(const std::vector<MeasurementRecord>& records, ExportFormat format) {
    if (format == ExportFormat::Csv) return render_csv(csv_rows(records));
    std::string out;
    for (const auto& r : records) out += to_json_line(r) + "\n";
    return out;
}

std::string render_heatmap(const Matrix& m) {
    m.validate();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& row : m.values) {
        for (const auto& v : row) {
            if (v) {
                lo = std::min(lo, *v);
                hi = std::max(hi, *v);
            }
        }
    }

    constexpr int cell_w = 96;
    constexpr int cell_h = 40;
    constexpr int left = 140;
    constexpr int top = 70;
    const int width = left + cell_w * static_cast<int>(m.column_labels.size()) + 20;
    const int height = top + cell_h * static_cast<int>(m.row_labels.size()) + 40;

    std::string out;
    out += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        width, height, width, height);
    std::string title = m.title;
    if (!m.unit.empty()) title += " (" + m.unit + ")";
    out += fmt::format("<text class=\"title\" x=\"{}\" y=\"20\" font-size=\"14\">{}</text>\n", left,
                       xml_escape(title));
    for (std::size_t c = 0; c < m.column_labels.size(); ++c) {
        out += fmt::format("<text class=\"col-label\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                           left + cell_w * static_cast<int>(c) + cell_w / 2, top - 10,
                           xml_escape(m.column_labels[c]));
    }
    for (std::size_t r = 0; r < m.row_labels.size(); ++r) {
        const int y = top + cell_h * static_cast<int>(r);
        out += fmt::format("<text class=\"row-label\" x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", left - 8,
                           y + cell_h / 2 + 4, xml_escape(m.row_labels[r]));
        for (std::size_t c = 0; c < m.column_labels.size(); ++c) {
            const int x = left + cell_w * static_cast<int>(c);
            const auto& v = m.values[r][c];
            std::string note = m.annotations.empty() ? "" : m.annotations[r][c];
            if (v) {
                const double t = hi > lo ? (*v - lo) / (hi - lo) : 0.0;
                out += fmt::format(
                    "<g class=\"cell\" data-row=\"{}\" data-col=\"{}\" data-value=\"{}\" data-scale=\"{:.4f}\">",
                    r, c, *v, t);
                out += fmt::format(
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\"/>", x, y,
                    cell_w, cell_h, ramp(t));
                out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{}\">{}</text>",
                                   x + cell_w / 2, y + cell_h / 2 + (note.empty() ? 4 : 0),
                                   t > 0.5 ? "#ffffff" : "#000000", format_value(*v));
            } else {
                out += fmt::format("<g class=\"cell missing\" data-row=\"{}\" data-col=\"{}\">", r, c);
                out += fmt::format(
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#d9d9d9\" stroke=\"#ffffff\"/>", x, y,
                    cell_w, cell_h);
                out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">n/a</text>", x + cell_w / 2,
                                   y + cell_h / 2 + (note.empty() ? 4 : 0));
            }
            if (!note.empty()) {
                out += fmt::format("<text class=\"note\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"9\">{}</text>",
                                   x + cell_w / 2, y + cell_h / 2 + 14, xml_escape(note));
            }
            out += "</g>\n";
        }
    }
    if (hi >= lo) {
        const int y = top + cell_h * static_cast<int>(m.row_labels.size()) + 24;
        out += fmt::format("<text class=\"scale\" x=\"{}\" y=\"{}\">scale: {} {} to {} {}</text>\n", left, y,
                           format_value(lo), xml_escape(m.unit), format_value(hi), xml_escape(m.unit));
    }
    out += "</svg>\n";
    return out;
}

std::string render_lines(const LinePlot& plot) {
    if (plot.series.empty()) throw Error("line plot has no series");
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    auto xt = [&](double x) {
        if (plot.x_axis == XAxis::Log2) {
            if (!(x > 0)) throw Error("log2 axis needs positive x values");
            return std::log2(x);
        }
        return x;
    };
    for (const auto& s : plot.series) {
        if (s.points.size() < 2) throw Error("series '" + s.label + "' needs at least two points");
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) throw Error("series '" + s.label + "' has a non-finite point");
            xmin = std::min(xmin, xt(x));
            xmax = std::max(xmax, xt(x));
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    for (const auto& mk : plot.markers) {
        xmin = std::min(xmin, xt(mk.x));
        xmax = std::max(xmax, xt(mk.x));
    }
    ymin = std::min(ymin, 0.0);
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;

    constexpr double width = 720, height = 420;
    constexpr double left = 70, right = 180, top = 40, bottom = 50;
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto px = [&](double x) { return left + (xt(x) - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::string out;
    out += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        width, height, width, height);
    out += fmt::format("<text class=\"title\" x=\"{}\" y=\"20\" font-size=\"14\">{}</text>\n", left,
                       xml_escape(plot.title));
    out += fmt::format("<rect class=\"frame\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" "
                       "stroke=\"#000000\"/>\n",
                       left, top, pw, ph);
    out += fmt::format("<text class=\"x-label\" x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}{}</text>\n",
                       left + pw / 2, height - 10, xml_escape(plot.x_label),
                       plot.x_axis == XAxis::Log2 ? " (log2)" : "");
    out += fmt::format("<text class=\"y-label\" x=\"15\" y=\"{:.2f}\" transform=\"rotate(-90 15 {:.2f})\" "
                       "text-anchor=\"middle\">{}</text>\n",
                       top + ph / 2, top + ph / 2, xml_escape(plot.y_label));
    out += fmt::format("<text class=\"tick\" x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", left - 4,
                       top + ph, format_value(ymin));
    out += fmt::format("<text class=\"tick\" x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", left - 4, top + 4,
                       format_value(ymax));

    for (const auto& mk : plot.markers) {
        const double x = px(mk.x);
        out += fmt::format("<g class=\"marker\"><line x1=\"{:.2f}\" y1=\"{}\" x2=\"{:.2f}\" y2=\"{:.2f}\" "
                           "stroke=\"#888888\" stroke-dasharray=\"4 3\"/>"
                           "<text x=\"{:.2f}\" y=\"{}\" font-size=\"10\">{}</text></g>\n",
                           x, top, x, top + ph, x + 2, top + 12, xml_escape(mk.label));
    }
    for (std::size_t i = 0; i < plot.series.size(); ++i) {
        const auto& s = plot.series[i];
        const std::string& color = kPalette[i % kPalette.size()];
        std::string pts;
        for (const auto& [x, y] : s.points) pts += fmt::format("{}{:.2f},{:.2f}", pts.empty() ? "" : " ", px(x), py(y));
        out += fmt::format("<g class=\"series\" data-label=\"{}\"><polyline points=\"{}\" fill=\"none\" "
                           "stroke=\"{}\" stroke-width=\"1.5\"/>",
                           xml_escape(s.label), pts, color);
        for (const auto& [x, y] : s.points) {
            out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>", px(x), py(y), color);
        }
        out += "</g>\n";
        const double ly = top + 14 + 18 * static_cast<double>(i);
        out += fmt::format("<g class=\"legend\"><line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"{}\" "
                           "stroke-width=\"2\"/><text x=\"{}\" y=\"{:.2f}\">{}</text></g>\n",
                           left + pw + 10, ly, left + pw + 30, ly, color, left + pw + 34, ly + 4,
                           xml_escape(s.label));
    }
    out += "</svg>\n";
    return out;
}

Matrix bounds_to_matrix(const BoundsMatrix& b) {
    Matrix m;
    m.title = std::string(to_string(b.op)) + " bound from " + b.initiator;
    m.unit = "GB/s";
    m.row_labels = b.rows;
    m.column_labels = b.columns;
    for (const auto& row : b.cells) {
        auto& values = m.values.emplace_back();
        auto& notes = m.annotations.emplace_back();
        for (const auto& cell : row) {
            if (cell.result) {
                values.emplace_back(to_double(cell.result->bound));
                notes.push_back(cell.result->limiting_resource);
            } else {
                values.emplace_back(std::nullopt);
                notes.push_back("unreachable");
            }
        }
    }
    return m;
}

Matrix records_to_matrix(const std::vector<MeasurementRecord>& records) {
    std::vector<std::string> rows, cols;
    std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
    std::set<std::string> units;
    auto add_unique = [](std::vector<std::string>& v, const std::string& s) {
        if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    };
    for (const auto& r : records) {
        const std::string row = r.placements.empty() ? "none" : r.placements[0].policy;
        std::string col(to_string(r.kernel));
        if (r.kernel == KernelKind::Copy && r.placements.size() > 1) col += "->" + r.placements[1].policy;
        add_unique(rows, row);
        add_unique(cols, col);
        auto& [sum, n] = acc[{row, col}];
        sum += r.derived_value;
        ++n;
        units.insert(r.unit);
    }
    Matrix m;
    m.title = "measured";
    m.unit = units.size() == 1 ? *units.begin() : "mixed";
    m.row_labels = rows;
    m.column_labels = cols;
    for (const auto& row : rows) {
        auto& values = m.values.emplace_back();
        for (const auto& col : cols) {
            auto it = acc.find({row, col});
            values.push_back(it == acc.end() ? std::nullopt : std::optional<double>(it->second.first / it->second.second));
        }
    }
    return m;
}

LinePlot records_to_lines(const std::vector<MeasurementRecord>& records) {
    LinePlot plot;
    plot.title = "derived value by buffer size";
    plot.x_label = "buffer bytes";
    plot.x_axis = XAxis::Log2;
    std::map<std::string, std::map<std::uint64_t, std::pair<double, int>>> groups;
    std::vector<std::string> order;
    std::set<std::string> units;
    for (const auto& r : records) {
        std::string label(to_string(r.kernel));
        for (const auto& p : r.placements) label += " " + p.policy;
        if (!groups.count(label)) order.push_back(label);
        auto& [sum, n] = groups[label][r.bytes_per_iteration];
        sum += r.derived_value;
        ++n;
        units.insert(r.unit);
    }
    plot.y_label = units.size() == 1 ? *units.begin() : "value";
    for (const auto& label : order) {
        const auto& pts = groups[label];
        if (pts.size() < 2) continue;
        Series s{label, {}};
        for (const auto& [size, v] : pts) s.points.emplace_back(static_cast<double>(size), v.first / v.second);
        plot.series.push_back(std::move(s));
    }
    return plot;
}

std::string format_bytes(std::uint64_t bytes) {
    constexpr std::uint64_t KiB = 1024, MiB = KiB * 1024, GiB = MiB * 1024;
    if (bytes >= GiB && bytes % GiB == 0) return fmt::format("{} GiB", bytes / GiB);
    if (bytes >= MiB && bytes % MiB == 0) return fmt::format("{} MiB", bytes / MiB);
    if (bytes >= KiB && bytes % KiB == 0) return fmt::format("{} KiB", bytes / KiB);
    return fmt::format("{} B", bytes);
}

std::vector<VerticalMarker> cache_markers(const ProcessingUnit& pu) {
    std::vector<VerticalMarker> out;
    for (const auto& c : pu.caches) {
        out.push_back({static_cast<double>(c.size), fmt::format("L{} {}", c.level, format_bytes(c.size))});
    }
    return out;
}

}  // namespace membench
