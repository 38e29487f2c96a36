// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace membench {

// Labelled grid of values. Missing cells (unreachable, failed) are nullopt.
struct Matrix {
    std::string title;
    std::string unit;
    std::vector<std::string> row_labels;
    std::vector<std::string> column_labels;
    std::vector<std::vector<std::optional<double>>> values;
    std::vector<std::vector<std::string>> annotations;  // optional; empty or same shape as values

    // Rectangular, labels unique, annotations empty or matching.
    void validate() const;
};

}  // namespace membench
