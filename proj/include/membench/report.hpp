// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "membench/matrix.hpp"
#include "membench/records.hpp"
#include "membench/topo.hpp"

namespace membench {

// CSV columns, in order. One row per iteration, warmup rows included.
inline constexpr std::string_view kCsvHeader =
    "case_id,kernel,cores,placements,bytes,iter_index,warmup_flag,elapsed_ns,derived_value,unit,topo_hash,timestamp";

struct CsvRow {
    std::string case_id;
    std::string kernel;
    std::string cores;       // "0;1"
    std::string placements;  // "node:0|node:1"
    std::uint64_t bytes = 0;
    std::uint64_t iter_index = 0;
    bool warmup = false;
    std::uint64_t elapsed_ns = 0;
    double derived_value = 0.0;
    std::string unit;
    std::string topo_hash;
    std::string timestamp;

    friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

std::vector<CsvRow> csv_rows(const std::vector<MeasurementRecord>& records);
std::string render_csv(const std::vector<CsvRow>& rows);
// Inverse of render_csv. Throws Error on a bad header or malformed row.
std::vector<CsvRow> parse_csv(std::string_view text);

enum class ExportFormat { Csv, JsonLines };

std::string export_records(const std::vector<MeasurementRecord>& records, ExportFormat format);

// Throws Error on an empty or invalid matrix. Cells are shaded on a linear
// single-hue ramp from the smallest to the largest value; missing cells are
// grey and labelled "n/a".
std::string render_heatmap(const Matrix& matrix);

enum class XAxis { Linear, Log2 };

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (x, y)
};

struct VerticalMarker {
    double x = 0.0;
    std::string label;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    XAxis x_axis = XAxis::Linear;
    std::vector<Series> series;
    std::vector<VerticalMarker> markers;
};

// Throws Error when there is no series, a series has fewer than two points,
// or a log2 axis sees a non-positive x.
std::string render_lines(const LinePlot& plot);

// Bound model as a heatmap-ready matrix (GB/s; unreachable cells empty and
// annotated with the reason).
Matrix bounds_to_matrix(const BoundsMatrix& bounds);

// Rows are source placements, columns kernels ("copy->dst" for copies);
// cells hold the mean derived value of matching records.
Matrix records_to_matrix(const std::vector<MeasurementRecord>& records);

// One series per (kernel, placement) over buffer size, log2 x axis.
LinePlot records_to_lines(const std::vector<MeasurementRecord>& records);

// Cache sizes of a PU as plot markers ("L1 64 KiB").
std::vector<VerticalMarker> cache_markers(const ProcessingUnit& pu);

std::string format_bytes(std::uint64_t bytes);

}  // namespace membench
