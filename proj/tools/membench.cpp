// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "membench/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return membench::dispatch(args, std::cout, std::cerr);
}
