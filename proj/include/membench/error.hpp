// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace membench {

// Domain failure. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Topology document rejected; carries every violated invariant.
class TopologyError : public Error {
public:
    explicit TopologyError(std::vector<std::string> issues);

    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    std::vector<std::string> issues_;
};

class TimeoutError : public Error {
public:
    using Error::Error;
};

}  // namespace membench
